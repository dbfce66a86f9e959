//! Declarative chart state and the commands that mutate it.

mod registry;
mod render;
mod table;
mod view;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use registry::{ChartEntry, ChartRegistry};
pub use render::render_spec;
pub use table::{
    date_to_days, days_to_date, ingest_csv, Column, ColumnType, Table, TableError, Value, DATE_FORMAT,
};
pub use view::{apply, pick, pick_at_fraction, Link, Provenance, ViewState, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Bar,
    Line,
    Point,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleType {
    Linear,
    Band,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Encoding {
    pub field: String,
    pub scale: ScaleType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Encodings {
    pub x: Encoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Encoding>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDecl {
    pub peer: String,
    pub field: String,
}

/// Where a chart's rows come from in a config record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    /// CSV text with optional column types.
    Csv {
        csv: String,
        #[serde(default)]
        types: BTreeMap<String, ColumnType>,
    },
    /// CSV file, resolved relative to the config that names it.
    CsvPath {
        csv_path: String,
        #[serde(default)]
        types: BTreeMap<String, ColumnType>,
    },
    Inline(serde_json::Value),
}

/// Wire and config form of a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpecRecord {
    pub chart_id: String,
    pub mark: Mark,
    pub encodings: Encodings,
    pub data: DataSource,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub base_domain: BTreeMap<Axis, [serde_json::Value; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkDecl>,
}

/// Scale of one positional axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    /// Linear or temporal; bounds in numeric units (days for dates).
    Continuous { kind: ScaleType, base: Window },
    /// Categories in first-appearance order; category `i` spans `[i, i+1]`.
    Band { categories: Vec<String> },
}

impl Scale {
    pub fn base(&self) -> Window {
        match self {
            Scale::Continuous { base, .. } => *base,
            Scale::Band { categories } => Window {
                lo: 0.0,
                hi: categories.len().max(1) as f64,
            },
        }
    }

    pub fn kind(&self) -> ScaleType {
        match self {
            Scale::Continuous { kind, .. } => *kind,
            Scale::Band { .. } => ScaleType::Band,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub chart_id: String,
    pub mark: Mark,
    pub encodings: Encodings,
    pub data: Table,
    /// Pannable/zoomable axes. Arc charts have none.
    pub scales: BTreeMap<Axis, Scale>,
    pub links: Vec<LinkDecl>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChartError {
    #[error("chart {chart}: no axis {axis}")]
    UnknownAxis { chart: String, axis: String },
    #[error("charts {0} and {1} are not linked")]
    UnlinkedPair(String, String),
    #[error("degenerate window [{0}, {0}]")]
    DegenerateWindow(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown chart {0}")]
    UnknownChart(String),
    #[error("chart spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

impl ChartError {
    pub fn code(&self) -> &'static str {
        match self {
            ChartError::UnknownAxis { .. } => "UnknownAxis",
            ChartError::UnlinkedPair(..) => "UnlinkedPair",
            ChartError::DegenerateWindow(_) => "DegenerateWindow",
            ChartError::InvalidParameter(_) => "InvalidParameter",
            ChartError::UnknownChart(_) => "UnknownChart",
            ChartError::InvalidSpec(_) | ChartError::Table(_) => "InvalidChartSpec",
        }
    }
}

fn bound_to_f64(v: &serde_json::Value, kind: ScaleType) -> Option<f64> {
    match (v, kind) {
        (serde_json::Value::Number(n), _) => n.as_f64(),
        (serde_json::Value::String(s), ScaleType::Temporal) => match Value::parse(s, ColumnType::Date)? {
            Value::Date(d) => Some(date_to_days(d)),
            _ => None,
        },
        _ => None,
    }
}

impl ChartSpec {
    /// Builds a spec from a record whose data is inline or CSV text. Records
    /// naming a CSV file must be resolved by the caller first.
    pub fn from_record(rec: &ChartSpecRecord) -> Result<Self, ChartError> {
        let table = match &rec.data {
            DataSource::Csv { csv, types } => ingest_csv(csv.as_bytes(), types)?,
            DataSource::Inline(v) => Table::from_json(v)?,
            DataSource::CsvPath { csv_path, .. } => {
                return Err(ChartError::InvalidSpec(format!("unresolved csv_path {csv_path}")))
            }
        };
        let mut base_overrides = BTreeMap::new();
        for (axis, [lo, hi]) in &rec.base_domain {
            let enc = match axis {
                Axis::X => Some(&rec.encodings.x),
                Axis::Y => rec.encodings.y.as_ref(),
            }
            .ok_or_else(|| ChartError::InvalidSpec(format!("base_domain for unencoded axis {}", axis.name())))?;
            let (lo, hi) = bound_to_f64(lo, enc.scale)
                .zip(bound_to_f64(hi, enc.scale))
                .ok_or_else(|| ChartError::InvalidSpec(format!("base_domain.{} bounds", axis.name())))?;
            base_overrides.insert(*axis, Window { lo, hi });
        }
        Self::new(
            rec.chart_id.clone(),
            rec.mark,
            rec.encodings.clone(),
            table,
            base_overrides,
            rec.links.clone(),
        )
    }

    pub fn new(
        chart_id: String,
        mark: Mark,
        encodings: Encodings,
        data: Table,
        base_overrides: BTreeMap<Axis, Window>,
        links: Vec<LinkDecl>,
    ) -> Result<Self, ChartError> {
        if chart_id.is_empty() {
            return Err(ChartError::InvalidSpec("empty chart_id".into()));
        }
        let mut encs = vec![("x", &encodings.x)];
        encs.extend(encodings.y.as_ref().map(|e| ("y", e)));
        encs.extend(encodings.color.as_ref().map(|e| ("color", e)));
        for (channel, enc) in &encs {
            let col = data
                .column(&enc.field)
                .ok_or_else(|| ChartError::InvalidSpec(format!("{channel} field {} not in data", enc.field)))?;
            let fits = match enc.scale {
                ScaleType::Linear => col.ty == ColumnType::Number,
                ScaleType::Temporal => col.ty == ColumnType::Date,
                ScaleType::Band => true,
            };
            if !fits {
                return Err(ChartError::InvalidSpec(format!(
                    "{channel} field {} of type {:?} cannot use a {:?} scale",
                    enc.field, col.ty, enc.scale
                )));
            }
        }
        for link in &links {
            if data.column(&link.field).is_none() {
                return Err(ChartError::InvalidSpec(format!("link field {} not in data", link.field)));
            }
        }

        let mut scales = BTreeMap::new();
        if mark == Mark::Arc {
            let y_ok = encodings.y.as_ref().map_or(false, |e| e.scale == ScaleType::Linear);
            if encodings.x.scale != ScaleType::Band || !y_ok {
                return Err(ChartError::InvalidSpec("arc needs a band x (category) and linear y (value)".into()));
            }
            if !base_overrides.is_empty() {
                return Err(ChartError::InvalidSpec("arc charts have no axis domains".into()));
            }
            if data.values(&encodings.y.as_ref().expect("checked").field)?.any(|v| v.as_f64().map_or(true, |x| x < 0.0)) {
                return Err(ChartError::InvalidSpec("arc values must be non-negative".into()));
            }
        } else {
            for (axis, enc) in [(Axis::X, Some(&encodings.x)), (Axis::Y, encodings.y.as_ref())] {
                let Some(enc) = enc else { continue };
                let scale = build_scale(&data, enc, base_overrides.get(&axis).copied())?;
                scales.insert(axis, scale);
            }
        }
        Ok(Self {
            chart_id,
            mark,
            encodings,
            data,
            scales,
            links,
        })
    }

    pub fn encoding(&self, axis: Axis) -> Option<&Encoding> {
        match axis {
            Axis::X => Some(&self.encodings.x),
            Axis::Y => self.encodings.y.as_ref(),
        }
    }

    pub fn scale(&self, axis: Axis) -> Result<&Scale, ChartError> {
        self.scales.get(&axis).ok_or_else(|| ChartError::UnknownAxis {
            chart: self.chart_id.clone(),
            axis: axis.name().to_string(),
        })
    }

    /// Position of a row on an axis: numeric value, or band center.
    pub fn position(&self, axis: Axis, row: usize) -> Option<f64> {
        let enc = self.encoding(axis)?;
        let col = self.data.column_index(&enc.field)?;
        let v = self.data.get(row, col)?;
        match self.scales.get(&axis)? {
            Scale::Continuous { .. } => v.as_f64(),
            Scale::Band { categories } => {
                let key = v.to_string();
                categories.iter().position(|c| *c == key).map(|i| i as f64 + 0.5)
            }
        }
    }

    pub fn to_record(&self) -> ChartSpecRecord {
        let base_domain = self
            .scales
            .iter()
            .filter_map(|(axis, s)| match s {
                Scale::Continuous { kind, base } => {
                    let enc = |x: f64| match kind {
                        ScaleType::Temporal => days_to_date(x)
                            .filter(|d| date_to_days(*d) == x)
                            .map(|d| serde_json::Value::String(d.format(DATE_FORMAT).to_string()))
                            .unwrap_or_else(|| serde_json::json!(x)),
                        _ => serde_json::json!(x),
                    };
                    Some((*axis, [enc(base.lo), enc(base.hi)]))
                }
                Scale::Band { .. } => None,
            })
            .collect();
        ChartSpecRecord {
            chart_id: self.chart_id.clone(),
            mark: self.mark,
            encodings: self.encodings.clone(),
            data: DataSource::Inline(self.data.to_json()),
            base_domain,
            links: self.links.clone(),
        }
    }
}

fn build_scale(data: &Table, enc: &Encoding, base: Option<Window>) -> Result<Scale, ChartError> {
    if enc.scale == ScaleType::Band {
        if base.is_some() {
            return Err(ChartError::InvalidSpec("band axes take no base_domain".into()));
        }
        let mut categories: Vec<String> = Vec::new();
        for v in data.values(&enc.field)? {
            let s = v.to_string();
            if !categories.contains(&s) {
                categories.push(s);
            }
        }
        return Ok(Scale::Band { categories });
    }
    let xs: Vec<f64> = data.values(&enc.field)?.filter_map(Value::as_f64).collect();
    let extent = xs.iter().fold(None, |acc: Option<(f64, f64)>, &x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    });
    let base = match (base, extent) {
        (Some(b), Some((lo, hi))) => {
            if !(b.lo <= lo && b.hi >= hi) {
                return Err(ChartError::InvalidSpec(format!(
                    "base_domain [{}, {}] does not cover data [{lo}, {hi}] of {}",
                    b.lo, b.hi, enc.field
                )));
            }
            b
        }
        (Some(b), None) => b,
        (None, Some((lo, hi))) if hi > lo => Window { lo, hi },
        (None, Some((lo, _))) => Window { lo: lo - 0.5, hi: lo + 0.5 },
        (None, None) => Window { lo: 0.0, hi: 1.0 },
    };
    if !(base.lo.is_finite() && base.hi.is_finite() && base.lo < base.hi) {
        return Err(ChartError::InvalidSpec(format!("empty base_domain for {}", enc.field)));
    }
    Ok(Scale::Continuous { kind: enc.scale, base })
}

/// How a linked selection picks its datum on the source chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum DatumSelector {
    /// Row nearest to this fraction of the current window along `axis`.
    AtFraction { axis: Axis, fraction: f64 },
    /// Mark nearest to a sheet coordinate.
    NearestUv { uv: [f64; 2] },
    Row { id: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    #[default]
    Replace,
    /// Every row outside the interval.
    Invert,
}

/// Normalized coordinates refer to the current view: 0 is the window's low
/// edge and 1 its high edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    SelectInterval {
        axis: Axis,
        interval: [f64; 2],
        #[serde(default)]
        mode: SelectMode,
    },
    /// Zoom to a normalized sub-window of one axis.
    Zoom { axis: Axis, window: [f64; 2] },
    /// Scale every axis span by `1/factor`, keeping the normalized `anchor` fixed.
    ZoomBy { factor: f64, anchor: [f64; 2] },
    /// Shift by fractions of the current span.
    Pan {
        #[serde(default)]
        dx: f64,
        #[serde(default)]
        dy: f64,
    },
    LinkSelect {
        source: String,
        target: String,
        datum: DatumSelector,
    },
    Reset,
}

fn unit(x: f64) -> bool {
    x.is_finite() && (0.0..=1.0).contains(&x)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SelectInterval { .. } => "select_interval",
            Command::Zoom { .. } | Command::ZoomBy { .. } => "zoom",
            Command::Pan { .. } => "pan",
            Command::LinkSelect { .. } => "link_select",
            Command::Reset => "reset",
        }
    }

    /// Checks parameters against the command's legal domain.
    pub fn validate(&self) -> Result<(), ChartError> {
        match self {
            Command::SelectInterval { interval: [a, b], .. } => {
                if !(unit(*a) && unit(*b) && a <= b) {
                    return Err(ChartError::InvalidParameter(format!("interval [{a}, {b}]")));
                }
            }
            Command::Zoom { window: [a, b], .. } => {
                if !(unit(*a) && unit(*b)) || a > b {
                    return Err(ChartError::InvalidParameter(format!("window [{a}, {b}]")));
                }
                if a == b {
                    return Err(ChartError::DegenerateWindow(*a));
                }
            }
            Command::ZoomBy { factor, anchor } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(ChartError::InvalidParameter(format!("zoom factor {factor}")));
                }
                if !anchor.iter().all(|c| unit(*c)) {
                    return Err(ChartError::InvalidParameter(format!("anchor {anchor:?}")));
                }
            }
            Command::Pan { dx, dy } => {
                if !(dx.is_finite() && dy.is_finite()) {
                    return Err(ChartError::InvalidParameter("pan delta".into()));
                }
            }
            Command::LinkSelect { datum, .. } => match datum {
                DatumSelector::AtFraction { fraction, .. } if !unit(*fraction) => {
                    return Err(ChartError::InvalidParameter(format!("fraction {fraction}")));
                }
                DatumSelector::NearestUv { uv } if !uv.iter().all(|c| unit(*c)) => {
                    return Err(ChartError::InvalidParameter(format!("uv {uv:?}")));
                }
                _ => {}
            },
            Command::Reset => {}
        }
        Ok(())
    }
}
