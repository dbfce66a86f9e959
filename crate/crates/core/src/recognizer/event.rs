use serde::{Deserialize, Serialize};

use crate::geometry::Uv;
use crate::mapping::DoiClass;
use crate::scene::HandId;

/// The ten detected paper actions, declared in arbitration priority order
/// (highest first) so the derived `Ord` is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Fold,
    Cover,
    Collate,
    Collocate,
    Pinch,
    PointDrag,
    Point,
    Flip,
    Tilt,
    Translate,
}

impl Action {
    pub const ALL: [Action; 10] = [
        Action::Fold,
        Action::Cover,
        Action::Collate,
        Action::Collocate,
        Action::Pinch,
        Action::PointDrag,
        Action::Point,
        Action::Flip,
        Action::Tilt,
        Action::Translate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::Fold => "fold",
            Action::Cover => "cover",
            Action::Collate => "collate",
            Action::Collocate => "collocate",
            Action::Pinch => "pinch",
            Action::PointDrag => "point_drag",
            Action::Point => "point",
            Action::Flip => "flip",
            Action::Tilt => "tilt",
            Action::Translate => "translate",
        }
    }

    /// DoI class of the payload this action carries.
    pub fn doi(self) -> DoiClass {
        match self {
            Action::Cover | Action::Point => DoiClass::PositionArea,
            Action::Collate | Action::Collocate => DoiClass::PositionArea,
            Action::Fold
            | Action::Pinch
            | Action::PointDrag
            | Action::Flip
            | Action::Tilt
            | Action::Translate => DoiClass::DirectionValue,
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Begin,
    Update,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UvAxis {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirAxis {
    U,
    V,
    Depth,
}

/// Closed interval of sheet coordinates along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisInterval {
    pub axis: UvAxis,
    pub lo: f64,
    pub hi: f64,
}

impl AxisInterval {
    pub fn is_valid(&self) -> bool {
        self.lo <= self.hi && (0.0..=1.0).contains(&self.lo) && (0.0..=1.0).contains(&self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PalmOrientation {
    PalmDown,
    PalmUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    LeftRight,
    TopBottom,
}

/// Degree-of-information payload. Free expression has no variant: no
/// detector produces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DoiPayload {
    Boolean {
        state: bool,
    },
    PositionArea {
        uv: Uv,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        area: Option<AxisInterval>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        palm: Option<PalmOrientation>,
    },
    DirectionValue {
        axis: DirAxis,
        sign: i8,
        value: f64,
        /// Sheet coordinate where a contact gesture started.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Uv>,
    },
    Relative {
        /// Collate: where the top sheet's center lands on the bottom sheet.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchor_uv: Option<Uv>,
        /// Collocate: arrangement of the two sheets.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<Layout>,
    },
}

impl DoiPayload {
    pub fn class(&self) -> DoiClass {
        match self {
            DoiPayload::Boolean { .. } => DoiClass::Boolean,
            // Relative positions are position/area information.
            DoiPayload::PositionArea { .. } | DoiPayload::Relative { .. } => DoiClass::PositionArea,
            DoiPayload::DirectionValue { .. } => DoiClass::DirectionValue,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            DoiPayload::Boolean { .. } => true,
            DoiPayload::PositionArea { uv, area, .. } => {
                uv.u.is_finite() && uv.v.is_finite() && area.map_or(true, |a| a.is_valid())
            }
            DoiPayload::DirectionValue { sign, value, .. } => {
                (*sign == 1 || *sign == -1) && value.is_finite()
            }
            DoiPayload::Relative { anchor_uv, layout } => anchor_uv.is_some() != layout.is_some(),
        }
    }
}

/// One phased occurrence of an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub action: Action,
    pub phase: Phase,
    /// One sheet, or two in role order: `[top, bottom]` for collate,
    /// `[left, right]` / `[top, bottom]` for collocate.
    pub sheet_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<HandId>,
    pub payload: DoiPayload,
    pub time_ms: u64,
}

impl ActionEvent {
    pub fn with_phase(&self, phase: Phase, time_ms: u64) -> Self {
        Self {
            phase,
            time_ms,
            ..self.clone()
        }
    }

    pub fn stream_key(&self) -> StreamKey {
        StreamKey {
            action: self.action,
            sheets: self.sheet_ids.clone(),
            hand: self.hand,
        }
    }
}

/// Identity of a begin/update/end stream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamKey {
    pub action: Action,
    pub sheets: Vec<String>,
    pub hand: Option<HandId>,
}

impl StreamKey {
    /// Sheet ids sorted, for role-independent comparisons.
    pub fn sheet_set(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.sheets.iter().map(String::as_str).collect();
        s.sort_unstable();
        s
    }
}
