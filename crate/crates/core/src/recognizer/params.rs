//! Detector thresholds. Every value is overridable from a config file,
//! either JSON or flat `key = value` lines with the same keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Fingertip-to-sheet distance that counts as contact (m).
    pub contact_dist: f64,
    /// Displacement separating a point from a point&drag (sheet units).
    pub drag_min: f64,
    pub tilt_deadzone_deg: f64,
    pub tilt_hysteresis_deg: f64,
    /// A tilt only begins while the sheet turns slower than this; faster
    /// sweeps belong to flips.
    pub tilt_max_rate_deg_s: f64,
    /// Fold is active while the panel dihedral is below this.
    pub fold_trigger_deg: f64,
    /// Minimum dihedral change between fold updates.
    pub fold_update_deg: f64,
    pub flip_complete_deg: f64,
    pub flip_window_ms: u64,
    /// Max deviation of the flip rotation axis from a sheet edge.
    pub flip_edge_tolerance_deg: f64,
    /// Camera-depth change that starts a translate (m).
    pub translate_min: f64,
    /// Rotation from the rest orientation above which motion is not a translate.
    pub translate_max_rotation_deg: f64,
    /// Depth must stay within `still_tol` for this long to count as at rest.
    pub still_window_ms: u64,
    pub still_tol: f64,
    pub collate_gap: f64,
    pub collate_align_deg: f64,
    /// Minimum overlap as a fraction of the smaller sheet.
    pub collate_overlap: f64,
    pub collocate_edge_gap: f64,
    pub collocate_coplanar_deg: f64,
    /// Consecutive gated frames before a gesture begins.
    pub debounce_frames: u32,
    pub cover_min_fingertips: usize,
    /// Max |palm-to-sheet distance| for a cover (m).
    pub cover_palm_dist: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            contact_dist: 0.010,
            drag_min: 0.015,
            tilt_deadzone_deg: 15.0,
            tilt_hysteresis_deg: 5.0,
            tilt_max_rate_deg_s: 120.0,
            fold_trigger_deg: 150.0,
            fold_update_deg: 1.0,
            flip_complete_deg: 150.0,
            flip_window_ms: 1500,
            flip_edge_tolerance_deg: 30.0,
            translate_min: 0.05,
            translate_max_rotation_deg: 20.0,
            still_window_ms: 500,
            still_tol: 0.015,
            collate_gap: 0.025,
            collate_align_deg: 10.0,
            collate_overlap: 0.60,
            collocate_edge_gap: 0.030,
            collocate_coplanar_deg: 10.0,
            debounce_frames: 5,
            cover_min_fingertips: 4,
            cover_palm_dist: 0.03,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParamsError {
    #[error("reading params: {0}")]
    Io(#[from] std::io::Error),
    #[error("params: {0}")]
    Parse(String),
    #[error("params: {0}")]
    Invalid(String),
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let positives = [
            ("contact_dist", self.contact_dist),
            ("drag_min", self.drag_min),
            ("tilt_deadzone_deg", self.tilt_deadzone_deg),
            ("tilt_hysteresis_deg", self.tilt_hysteresis_deg),
            ("tilt_max_rate_deg_s", self.tilt_max_rate_deg_s),
            ("fold_trigger_deg", self.fold_trigger_deg),
            ("fold_update_deg", self.fold_update_deg),
            ("flip_complete_deg", self.flip_complete_deg),
            ("flip_window_ms", self.flip_window_ms as f64),
            ("flip_edge_tolerance_deg", self.flip_edge_tolerance_deg),
            ("translate_min", self.translate_min),
            ("translate_max_rotation_deg", self.translate_max_rotation_deg),
            ("still_window_ms", self.still_window_ms as f64),
            ("still_tol", self.still_tol),
            ("collate_gap", self.collate_gap),
            ("collate_align_deg", self.collate_align_deg),
            ("collate_overlap", self.collate_overlap),
            ("collocate_edge_gap", self.collocate_edge_gap),
            ("collocate_coplanar_deg", self.collocate_coplanar_deg),
            ("debounce_frames", self.debounce_frames as f64),
            ("cover_min_fingertips", self.cover_min_fingertips as f64),
            ("cover_palm_dist", self.cover_palm_dist),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamsError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tilt_hysteresis_deg >= self.tilt_deadzone_deg {
            return Err(ParamsError::Invalid(
                "tilt_hysteresis_deg must be smaller than tilt_deadzone_deg".into(),
            ));
        }
        if self.collate_overlap > 1.0 {
            return Err(ParamsError::Invalid("collate_overlap is a fraction in (0,1]".into()));
        }
        if self.cover_min_fingertips > 5 {
            return Err(ParamsError::Invalid("cover_min_fingertips is at most 5".into()));
        }
        Ok(())
    }

    /// Parses JSON, falling back to `key = value` lines (`#` comments allowed).
    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        let params: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))?
        } else {
            let mut map = serde_json::Map::new();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| ParamsError::Parse(format!("line {}: expected key = value", i + 1)))?;
                let v: serde_json::Value = serde_json::from_str(v.trim())
                    .map_err(|_| ParamsError::Parse(format!("line {}: value is not a number", i + 1)))?;
                map.insert(k.trim().to_string(), v);
            }
            serde_json::from_value(serde_json::Value::Object(map))
                .map_err(|e| ParamsError::Parse(e.to_string()))?
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamsError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub(crate) fn tilt_enter(&self) -> f64 {
        self.tilt_deadzone_deg.to_radians()
    }

    pub(crate) fn tilt_exit(&self) -> f64 {
        (self.tilt_deadzone_deg - self.tilt_hysteresis_deg).to_radians()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DetectorParams::default().validate().unwrap();
    }

    #[test]
    fn flat_and_json_forms_agree() {
        let flat = "# overrides\ncontact_dist = 0.02\ndebounce_frames=3\n";
        let json = r#"{"contact_dist": 0.02, "debounce_frames": 3}"#;
        let a = DetectorParams::parse(flat).unwrap();
        let b = DetectorParams::parse(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.contact_dist, 0.02);
        assert_eq!(a.drag_min, 0.015);
    }

    #[test]
    fn rejects_hysteresis_not_below_deadzone() {
        let err = DetectorParams::parse(r#"{"tilt_hysteresis_deg": 15}"#).unwrap_err();
        assert!(matches!(err, ParamsError::Invalid(_)));
    }

    #[test]
    fn rejects_unknown_and_nonpositive_keys() {
        assert!(DetectorParams::parse("bogus = 1").is_err());
        assert!(DetectorParams::parse("drag_min = -1").is_err());
    }
}
