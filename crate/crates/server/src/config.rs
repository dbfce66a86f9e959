use std::path::{Path, PathBuf};

use paperlens_core::chart::{ChartError, ChartSpec, ChartSpecRecord, DataSource};
use paperlens_core::mapping::{BindingError, BindingTable};
use paperlens_core::recognizer::{DetectorParams, ParamsError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{path}: chart {chart_id}: {source}")]
    Chart { path: PathBuf, chart_id: String, source: ChartError },
    #[error(transparent)]
    Bindings(#[from] BindingError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Everything a fresh session starts from.
#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub charts: Vec<ChartSpec>,
    pub bindings: BindingTable,
    pub params: DetectorParams,
}

impl SessionConfig {
    pub fn load(charts: &[PathBuf], bindings: Option<&Path>, params: Option<&Path>) -> Result<Self, ConfigError> {
        let mut specs = Vec::new();
        for p in charts {
            specs.extend(load_charts(p)?);
        }
        Ok(Self {
            charts: specs,
            bindings: match bindings {
                Some(p) => BindingTable::load(p)?,
                None => BindingTable::default(),
            },
            params: match params {
                Some(p) => DetectorParams::load(p)?,
                None => DetectorParams::default(),
            },
        })
    }
}

/// Reads a chart config: one record or an array of them. `csv_path` entries
/// are read relative to the config file.
pub fn load_charts(path: &Path) -> Result<Vec<ChartSpec>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), detail: e.to_string() })?;
    let items = match v {
        serde_json::Value::Array(items) => items,
        one => vec![one],
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    items
        .into_iter()
        .map(|item| {
            let mut rec: ChartSpecRecord = serde_json::from_value(item)
                .map_err(|e| ConfigError::Parse { path: path.into(), detail: e.to_string() })?;
            resolve_csv(&mut rec, dir).map_err(|source| ConfigError::Io { path: path.into(), source })?;
            ChartSpec::from_record(&rec).map_err(|source| ConfigError::Chart {
                path: path.into(),
                chart_id: rec.chart_id.clone(),
                source,
            })
        })
        .collect()
}

fn resolve_csv(rec: &mut ChartSpecRecord, dir: &Path) -> std::io::Result<()> {
    if let DataSource::CsvPath { csv_path, types } = &rec.data {
        let csv = std::fs::read_to_string(dir.join(csv_path))
            .map_err(|e| std::io::Error::new(e.kind(), format!("{csv_path}: {e}")))?;
        rec.data = DataSource::Csv { csv, types: types.clone() };
    }
    Ok(())
}
