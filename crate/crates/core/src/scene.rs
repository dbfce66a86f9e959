//! Frame data model fed to the recognizer, its JSON wire form, and JSONL traces.
//!
//! The wire form is documented in `docs/schema/frame.schema.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, SheetGeometry, Uv, UNIT_NORM_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Line { line: usize, source: SceneError },
}

impl TraceError {
    pub fn line(&self) -> Option<usize> {
        match self {
            TraceError::Line { line, .. } => Some(*line),
            TraceError::Io(_) => None,
        }
    }
}

// ── Pose wire form ─────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    position: [f64; 3],
    /// `[w, x, y, z]`
    orientation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRecord {
            position: self.position_array(),
            orientation: self.wxyz(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PoseRecord::deserialize(d)?;
        Pose::from_raw(r.position, r.orientation).map_err(serde::de::Error::custom)
    }
}

// ── Panels ─────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    Base,
    Flap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreaseAxis {
    /// Vertical crease at a fixed `u`.
    U,
    /// Horizontal crease at a fixed `v`.
    V,
}

/// Which side of the crease the flap sits on: `High` is right (u) or top (v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlapSide {
    Low,
    #[default]
    High,
}

impl FlapSide {
    pub fn sign(self) -> i8 {
        match self {
            FlapSide::Low => -1,
            FlapSide::High => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crease {
    pub axis: CreaseAxis,
    /// Crease coordinate along `axis`, strictly inside (0, 1).
    pub at: f64,
    pub side: FlapSide,
}

impl Crease {
    /// Fraction of the sheet taken up by the flap.
    pub fn flap_fraction(&self) -> f64 {
        match self.side {
            FlapSide::High => 1.0 - self.at,
            FlapSide::Low => self.at,
        }
    }

    /// Whether a sheet coordinate lies on the flap side of the crease.
    pub fn on_flap(&self, uv: Uv) -> bool {
        let c = match self.axis {
            CreaseAxis::U => uv.u,
            CreaseAxis::V => uv.v,
        };
        match self.side {
            FlapSide::High => c > self.at,
            FlapSide::Low => c < self.at,
        }
    }
}

/// One rigid panel of a sheet.
///
/// A flap's pose is the pose the whole sheet frame would have if it were
/// rigidly attached to the flap; an unfolded flap has the base pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub sheet_id: String,
    pub kind: PanelKind,
    pub pose: Pose,
    pub geom: SheetGeometry,
    pub crease: Option<Crease>,
}

impl Panel {
    pub fn base(sheet_id: impl Into<String>, pose: Pose, geom: SheetGeometry) -> Self {
        Self {
            sheet_id: sheet_id.into(),
            kind: PanelKind::Base,
            pose,
            geom,
            crease: None,
        }
    }

    pub fn flap(sheet_id: impl Into<String>, pose: Pose, geom: SheetGeometry, crease: Crease) -> Self {
        Self {
            sheet_id: sheet_id.into(),
            kind: PanelKind::Flap,
            pose,
            geom,
            crease: Some(crease),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PanelRecord {
    sheet_id: String,
    panel_id: PanelKind,
    pose: Pose,
    geom: SheetGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crease_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crease_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flap_side: Option<FlapSide>,
}

impl Serialize for Panel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (crease_u, crease_v, flap_side) = match self.crease {
            Some(Crease { axis: CreaseAxis::U, at, side }) => (Some(at), None, Some(side)),
            Some(Crease { axis: CreaseAxis::V, at, side }) => (None, Some(at), Some(side)),
            None => (None, None, None),
        };
        PanelRecord {
            sheet_id: self.sheet_id.clone(),
            panel_id: self.kind,
            pose: self.pose,
            geom: self.geom,
            crease_u,
            crease_v,
            flap_side,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Panel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = PanelRecord::deserialize(d)?;
        let crease = match (r.crease_u, r.crease_v) {
            (Some(_), Some(_)) => return Err(D::Error::custom("panel has both crease_u and crease_v")),
            (Some(at), None) => Some((CreaseAxis::U, at)),
            (None, Some(at)) => Some((CreaseAxis::V, at)),
            (None, None) => None,
        };
        let crease = match (r.panel_id, crease) {
            (PanelKind::Base, None) => {
                if r.flap_side.is_some() {
                    return Err(D::Error::custom("base panel cannot carry flap_side"));
                }
                None
            }
            (PanelKind::Base, Some(_)) => {
                return Err(D::Error::custom("base panel cannot carry a crease"))
            }
            (PanelKind::Flap, None) => {
                return Err(D::Error::custom("flap panel must carry crease_u or crease_v"))
            }
            (PanelKind::Flap, Some((axis, at))) => {
                if !(at > 0.0 && at < 1.0) {
                    return Err(D::Error::custom(format!("crease coordinate {at} not in (0,1)")));
                }
                Some(Crease {
                    axis,
                    at,
                    side: r.flap_side.unwrap_or_default(),
                })
            }
        };
        if !r.geom.is_valid() {
            return Err(D::Error::custom("sheet geometry must have positive width and height"));
        }
        Ok(Panel {
            sheet_id: r.sheet_id,
            kind: r.panel_id,
            pose: r.pose,
            geom: r.geom,
            crease,
        })
    }
}

// ── Hands ──────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandId {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    ThumbTip,
    IndexTip,
    MiddleTip,
    RingTip,
    LittleTip,
    PalmCenter,
}

impl Joint {
    pub const FINGERTIPS: [Joint; 5] = [
        Joint::ThumbTip,
        Joint::IndexTip,
        Joint::MiddleTip,
        Joint::RingTip,
        Joint::LittleTip,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub hand: HandId,
    pub joints: BTreeMap<Joint, Vector3<f64>>,
    pub palm_normal: Vector3<f64>,
}

impl HandFrame {
    pub fn joint(&self, j: Joint) -> Option<&Vector3<f64>> {
        self.joints.get(&j)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandRecord {
    hand_id: HandId,
    joints: BTreeMap<Joint, [f64; 3]>,
    palm_normal: [f64; 3],
}

impl Serialize for HandFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        HandRecord {
            hand_id: self.hand,
            joints: self.joints.iter().map(|(j, p)| (*j, [p.x, p.y, p.z])).collect(),
            palm_normal: [self.palm_normal.x, self.palm_normal.y, self.palm_normal.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HandFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = HandRecord::deserialize(d)?;
        if r.joints.values().flatten().any(|c| !c.is_finite()) {
            return Err(D::Error::custom("hand joint has a non-finite coordinate"));
        }
        let n = Vector3::from(r.palm_normal);
        if !n.iter().all(|c| c.is_finite()) || (n.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(D::Error::custom("palm_normal must be unit length"));
        }
        Ok(HandFrame {
            hand: r.hand_id,
            joints: r.joints.into_iter().map(|(j, p)| (j, Vector3::from(p))).collect(),
            palm_normal: n,
        })
    }
}

// ── Frames ─────────────────────────────────────────────────

/// One timestamped snapshot of every panel and hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFrame {
    pub seq: u64,
    pub time_ms: u64,
    pub camera: Pose,
    pub panels: Vec<Panel>,
    pub hands: Vec<HandFrame>,
}

/// The panels of one sheet within a frame.
#[derive(Debug, Clone, Copy)]
pub struct SheetPanels<'a> {
    pub base: &'a Panel,
    pub flap: Option<&'a Panel>,
}

impl<'a> SheetPanels<'a> {
    pub fn id(&self) -> &'a str {
        &self.base.sheet_id
    }
}

impl SceneFrame {
    pub fn new(seq: u64, time_ms: u64, camera: Pose) -> Self {
        Self {
            seq,
            time_ms,
            camera,
            panels: Vec::new(),
            hands: Vec::new(),
        }
    }

    /// Checks the cross-record invariants that serde alone cannot express.
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::MalformedFrame(m));
        if self.hands.len() > 2 {
            return bad(format!("{} hands (at most 2)", self.hands.len()));
        }
        if self.hands.len() == 2 && self.hands[0].hand == self.hands[1].hand {
            return bad("duplicate hand_id".into());
        }
        let mut seen: BTreeMap<(&str, PanelKind), ()> = BTreeMap::new();
        for p in &self.panels {
            if p.sheet_id.is_empty() {
                return bad("empty sheet_id".into());
            }
            if seen.insert((p.sheet_id.as_str(), p.kind), ()).is_some() {
                return bad(format!("sheet {} has more than one {:?} panel", p.sheet_id, p.kind));
            }
        }
        for p in self.panels.iter().filter(|p| p.kind == PanelKind::Flap) {
            if !seen.contains_key(&(p.sheet_id.as_str(), PanelKind::Base)) {
                return bad(format!("flap of sheet {} has no base panel", p.sheet_id));
            }
        }
        Ok(())
    }

    /// Sheets in first-appearance order of their base panel.
    pub fn sheets(&self) -> Vec<SheetPanels<'_>> {
        self.panels
            .iter()
            .filter(|p| p.kind == PanelKind::Base)
            .map(|base| SheetPanels {
                base,
                flap: self
                    .panels
                    .iter()
                    .find(|p| p.kind == PanelKind::Flap && p.sheet_id == base.sheet_id),
            })
            .collect()
    }

    pub fn hand(&self, id: HandId) -> Option<&HandFrame> {
        self.hands.iter().find(|h| h.hand == id)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("frame serialization is infallible")
    }
}

/// Encodes a frame into its wire record.
pub fn encode_frame(frame: &SceneFrame) -> serde_json::Value {
    serde_json::to_value(frame).expect("frame serialization is infallible")
}

/// Decodes and validates a wire record.
pub fn decode_frame(record: &serde_json::Value) -> Result<SceneFrame, SceneError> {
    let frame = SceneFrame::deserialize(record).map_err(|e| SceneError::MalformedFrame(e.to_string()))?;
    frame.validate()?;
    Ok(frame)
}

pub fn decode_frame_str(s: &str) -> Result<SceneFrame, SceneError> {
    let frame: SceneFrame =
        serde_json::from_str(s).map_err(|e| SceneError::MalformedFrame(e.to_string()))?;
    frame.validate()?;
    Ok(frame)
}

// ── Traces ─────────────────────────────────────────────────

/// Streams frames from a JSONL trace. Blank lines are skipped; line numbers are 1-based.
pub struct TraceReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
        }
    }
}

impl TraceReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<SceneFrame, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(decode_frame_str(&text).map_err(|source| TraceError::Line {
                line: self.line,
                source,
            }));
        }
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<SceneFrame>, TraceError> {
    TraceReader::open(path)?.collect()
}

pub fn write_trace<'a>(
    path: impl AsRef<Path>,
    frames: impl IntoIterator<Item = &'a SceneFrame>,
) -> Result<(), TraceError> {
    let mut w = BufWriter::new(File::create(path)?);
    for f in frames {
        writeln!(w, "{}", f.to_json_line())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> SceneFrame {
        let mut f = SceneFrame::new(1, 0, Pose::from_translation(0.1, 0.15, 0.6));
        f.panels.push(Panel::base("A", Pose::identity(), SheetGeometry::A4));
        f
    }

    #[test]
    fn minimal_frame_has_empty_hands() {
        let rec = encode_frame(&minimal());
        assert_eq!(rec["hands"], json!([]));
        assert_eq!(decode_frame(&rec).unwrap(), minimal());
    }

    #[test]
    fn flap_encodes_crease_u() {
        let mut f = minimal();
        f.panels.push(Panel::flap(
            "A",
            Pose::identity(),
            SheetGeometry::A4,
            Crease { axis: CreaseAxis::U, at: 0.75, side: FlapSide::High },
        ));
        let line = f.to_json_line();
        assert!(line.contains("\"crease_u\":0.75"), "{line}");
        assert_eq!(decode_frame_str(&line).unwrap(), f);
    }

    #[test]
    fn missing_panels_is_malformed() {
        let mut rec = encode_frame(&minimal());
        rec.as_object_mut().unwrap().remove("panels");
        assert!(matches!(decode_frame(&rec), Err(SceneError::MalformedFrame(_))));
    }

    #[test]
    fn three_hands_is_malformed() {
        let hand = json!({"hand_id":"left","joints":{},"palm_normal":[0.0,0.0,-1.0]});
        let mut rec = encode_frame(&minimal());
        rec["hands"] = json!([hand.clone(), hand.clone(), hand]);
        let err = decode_frame(&rec).unwrap_err();
        assert!(err.to_string().contains("3 hands"), "{err}");
    }

    #[test]
    fn flap_without_base_is_malformed() {
        let mut f = SceneFrame::new(1, 0, Pose::identity());
        f.panels.push(Panel::flap(
            "A",
            Pose::identity(),
            SheetGeometry::A4,
            Crease { axis: CreaseAxis::V, at: 0.5, side: FlapSide::High },
        ));
        assert!(decode_frame(&encode_frame(&f)).is_err());
    }

    #[test]
    fn crease_fraction_by_side() {
        let c = Crease { axis: CreaseAxis::U, at: 0.75, side: FlapSide::High };
        assert!((c.flap_fraction() - 0.25).abs() < 1e-15);
        assert!(c.on_flap(Uv::new(0.8, 0.1)));
        let c = Crease { side: FlapSide::Low, ..c };
        assert!((c.flap_fraction() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn trace_round_trip_and_line_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let frames: Vec<_> = (1..=3)
            .map(|i| {
                let mut f = minimal();
                f.seq = i;
                f.time_ms = i * 16;
                f
            })
            .collect();
        write_trace(&path, &frames).unwrap();
        assert_eq!(read_trace(&path).unwrap(), frames);

        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, text).unwrap();
        let err = read_trace(&path).unwrap_err();
        assert_eq!(err.line(), Some(4));
    }
}
