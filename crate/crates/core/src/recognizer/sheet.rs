//! Single-sheet pose gestures: fold, tilt, flip and translate.

use std::collections::VecDeque;

use nalgebra::UnitQuaternion;

use crate::geometry::{camera_depth, dihedral, facing, tilt_angles, Facing, Pose};
use crate::scene::CreaseAxis;

use super::event::{Action, ActionEvent, DirAxis, DoiPayload, Phase, UvAxis};
use super::params::DetectorParams;
use super::surface::Surface;

// Margin that keeps threshold comparisons away from round-off at the boundary.
const ANGLE_EPS: f64 = 1e-9;
const TRANSLATE_UPDATE_EPS: f64 = 0.001;

#[derive(Debug, Clone)]
pub(crate) struct SheetTracker {
    id: String,
    fold: Fold,
    tilt: Tilt,
    flip: Flip,
    translate: Translate,
}

impl SheetTracker {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            fold: Fold::default(),
            tilt: Tilt::default(),
            flip: Flip::default(),
            translate: Translate::default(),
        }
    }

    fn event(&self, action: Action, phase: Phase, payload: DoiPayload, time_ms: u64) -> ActionEvent {
        ActionEvent {
            action,
            phase,
            sheet_ids: vec![self.id.clone()],
            hand: None,
            payload,
            time_ms,
        }
    }

    pub fn step(
        &mut self,
        surface: &Surface<'_>,
        camera: &Pose,
        params: &DetectorParams,
        time_ms: u64,
        out: &mut Vec<ActionEvent>,
    ) {
        let mut emitted = Vec::new();
        self.fold.step(surface, params, &mut emitted);
        self.tilt.step(surface, camera, params, time_ms, &mut emitted);
        self.flip.step(surface, params, time_ms, &mut emitted);
        self.translate.step(surface, camera, params, time_ms, &mut emitted);
        for (action, phase, payload) in emitted {
            out.push(self.event(action, phase, payload, time_ms));
        }
    }

    /// Ends open streams when the sheet drops out of the frame.
    pub fn vanish(&mut self, time_ms: u64, out: &mut Vec<ActionEvent>) {
        let mut emitted = Vec::new();
        if let Some(p) = self.fold.active.take() {
            emitted.push((Action::Fold, Phase::End, p.payload));
        }
        if let Some(p) = self.tilt.active.take() {
            emitted.push((Action::Tilt, Phase::End, p.payload));
        }
        if let TranslatePhase::Active { payload, .. } = std::mem::take(&mut self.translate.phase) {
            emitted.push((Action::Translate, Phase::End, payload));
        }
        for (action, phase, payload) in emitted {
            out.push(self.event(action, phase, payload, time_ms));
        }
    }
}

type Emitted = Vec<(Action, Phase, DoiPayload)>;

// ── Fold ───────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct ActiveFold {
    payload: DoiPayload,
    last_dihedral: f64,
}

#[derive(Debug, Clone, Default)]
struct Fold {
    pending: u32,
    active: Option<ActiveFold>,
}

impl Fold {
    fn step(&mut self, s: &Surface<'_>, params: &DetectorParams, out: &mut Emitted) {
        let reading = s.flap.and_then(|flap| {
            let crease = flap.crease?;
            Some((dihedral(&s.base.pose, &flap.pose), crease))
        });
        let trigger = params.fold_trigger_deg.to_radians();
        match (&mut self.active, reading) {
            (Some(active), Some((angle, _))) if angle < trigger => {
                if (angle - active.last_dihedral).abs() >= params.fold_update_deg.to_radians() {
                    active.last_dihedral = angle;
                    out.push((Action::Fold, Phase::Update, active.payload.clone()));
                }
            }
            (Some(_), _) => {
                let a = self.active.take().expect("checked above");
                out.push((Action::Fold, Phase::End, a.payload));
                self.pending = 0;
            }
            (None, Some((angle, crease))) if angle < trigger => {
                self.pending += 1;
                if self.pending >= params.debounce_frames {
                    let payload = DoiPayload::DirectionValue {
                        axis: match crease.axis {
                            CreaseAxis::U => DirAxis::U,
                            CreaseAxis::V => DirAxis::V,
                        },
                        sign: crease.side.sign(),
                        value: crease.flap_fraction(),
                        origin: None,
                    };
                    out.push((Action::Fold, Phase::Begin, payload.clone()));
                    self.active = Some(ActiveFold {
                        payload,
                        last_dihedral: angle,
                    });
                }
            }
            (None, _) => self.pending = 0,
        }
    }
}

// ── Tilt ───────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct ActiveTilt {
    axis: UvAxis,
    payload: DoiPayload,
}

#[derive(Debug, Clone, Default)]
struct Tilt {
    /// Gated frames so far, with the dominant angle of the first one.
    pending: Option<(u32, u64, f64)>,
    active: Option<ActiveTilt>,
}

/// Tilt payload: `value` is the magnitude, `sign` points downhill in sheet coordinates.
fn tilt_payload(axis: UvAxis, pitch: f64, roll: f64) -> DoiPayload {
    let (dir, sign, value) = match axis {
        UvAxis::U => (DirAxis::U, if roll >= 0.0 { 1 } else { -1 }, roll.abs()),
        // Positive pitch lifts the top edge, so downhill is -v.
        UvAxis::V => (DirAxis::V, if pitch > 0.0 { -1 } else { 1 }, pitch.abs()),
    };
    DoiPayload::DirectionValue {
        axis: dir,
        sign,
        value,
        origin: None,
    }
}

impl Tilt {
    fn step(&mut self, s: &Surface<'_>, camera: &Pose, params: &DetectorParams, time_ms: u64, out: &mut Emitted) {
        let front = facing(s.pose(), camera) == Facing::Front;
        let (pitch, roll) = tilt_angles(s.pose());
        if let Some(active) = &mut self.active {
            let angle = match active.axis {
                UvAxis::U => roll.abs(),
                UvAxis::V => pitch.abs(),
            };
            if !front || angle < params.tilt_exit() - ANGLE_EPS {
                let a = self.active.take().expect("active");
                out.push((Action::Tilt, Phase::End, a.payload));
                self.pending = None;
            } else {
                active.payload = tilt_payload(active.axis, pitch, roll);
                out.push((Action::Tilt, Phase::Update, active.payload.clone()));
            }
            return;
        }
        let dominant = roll.abs().max(pitch.abs());
        if !front || dominant <= params.tilt_enter() + ANGLE_EPS {
            self.pending = None;
            return;
        }
        let (frames, t0, a0) = match self.pending {
            Some((n, t0, a0)) => (n + 1, t0, a0),
            None => (1, time_ms, dominant),
        };
        self.pending = Some((frames, t0, a0));
        if frames < params.debounce_frames {
            return;
        }
        let dt = (time_ms.saturating_sub(t0)) as f64 / 1000.0;
        let rate = if dt > 0.0 { (dominant - a0).abs() / dt } else { 0.0 };
        if rate > params.tilt_max_rate_deg_s.to_radians() {
            // Still sweeping fast; slide the rate window forward.
            self.pending = Some((frames, time_ms, dominant));
            return;
        }
        let axis = if roll.abs() >= pitch.abs() { UvAxis::U } else { UvAxis::V };
        let payload = tilt_payload(axis, pitch, roll);
        out.push((Action::Tilt, Phase::Begin, payload.clone()));
        self.active = Some(ActiveTilt { axis, payload });
        self.pending = None;
    }
}

// ── Flip ───────────────────────────────────────────────────

#[derive(Debug, Clone, Default)]
struct Flip {
    history: VecDeque<(u64, UnitQuaternion<f64>)>,
}

impl Flip {
    fn step(&mut self, s: &Surface<'_>, params: &DetectorParams, time_ms: u64, out: &mut Emitted) {
        let now = s.pose().orientation;
        while let Some(&(t, _)) = self.history.front() {
            if time_ms.saturating_sub(t) > params.flip_window_ms {
                self.history.pop_front();
            } else {
                break;
            }
        }
        let complete = params.flip_complete_deg.to_radians();
        let edge_cos = params.flip_edge_tolerance_deg.to_radians().cos();
        let found = self.history.iter().find_map(|(_, then)| {
            // Rotation expressed in the sheet frame at the earlier time.
            let rel = then.inverse() * now;
            let (axis, angle) = rel.axis_angle()?;
            if angle < complete - ANGLE_EPS {
                return None;
            }
            if axis.y.abs() >= edge_cos {
                // About a vertical edge: a negative turn about +y lifts the
                // right side over a left hinge.
                Some((DirAxis::U, if axis.y > 0.0 { 1 } else { -1 }, angle))
            } else if axis.x.abs() >= edge_cos {
                // About a horizontal edge: a positive turn about +x lifts the
                // top over a bottom hinge.
                Some((DirAxis::V, if axis.x > 0.0 { -1 } else { 1 }, angle))
            } else {
                None
            }
        });
        if let Some((axis, sign, angle)) = found {
            let payload = DoiPayload::DirectionValue {
                axis,
                sign,
                value: angle,
                origin: None,
            };
            out.push((Action::Flip, Phase::Begin, payload.clone()));
            out.push((Action::Flip, Phase::End, payload));
            self.history.clear();
        }
        self.history.push_back((time_ms, now));
    }
}

// ── Translate ──────────────────────────────────────────────

#[derive(Debug, Clone, Default)]
enum TranslatePhase {
    #[default]
    Unanchored,
    Idle {
        anchor: f64,
        rest: UnitQuaternion<f64>,
        pending: u32,
    },
    Active {
        anchor: f64,
        rest: UnitQuaternion<f64>,
        payload: DoiPayload,
        delta: f64,
    },
}

#[derive(Debug, Clone, Default)]
struct Translate {
    phase: TranslatePhase,
    window: VecDeque<(u64, f64)>,
}

fn translate_payload(delta: f64) -> DoiPayload {
    DoiPayload::DirectionValue {
        axis: DirAxis::Depth,
        sign: if delta < 0.0 { -1 } else { 1 },
        value: delta.abs(),
        origin: None,
    }
}

impl Translate {
    /// Mean depth if the sheet has been at rest for the whole window.
    fn rest_depth(&self, time_ms: u64, params: &DetectorParams) -> Option<f64> {
        let &(t0, _) = self.window.front()?;
        if time_ms.saturating_sub(t0) < params.still_window_ms {
            return None;
        }
        let (lo, hi, sum) = self
            .window
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, sum), &(_, d)| {
                (lo.min(d), hi.max(d), sum + d)
            });
        (hi - lo < params.still_tol).then(|| sum / self.window.len() as f64)
    }

    fn step(&mut self, s: &Surface<'_>, camera: &Pose, params: &DetectorParams, time_ms: u64, out: &mut Emitted) {
        let depth = camera_depth(camera, &s.center());
        let orientation = s.pose().orientation;
        self.window.push_back((time_ms, depth));
        while let Some(&(t, _)) = self.window.front() {
            if time_ms.saturating_sub(t) > params.still_window_ms {
                self.window.pop_front();
            } else {
                break;
            }
        }
        let rest_depth = self.rest_depth(time_ms, params);
        let max_rot = params.translate_max_rotation_deg.to_radians();
        let rotated = |rest: &UnitQuaternion<f64>| rest.angle_to(&orientation) > max_rot;

        self.phase = match std::mem::take(&mut self.phase) {
            TranslatePhase::Unanchored => TranslatePhase::Idle {
                anchor: depth,
                rest: orientation,
                pending: 0,
            },
            TranslatePhase::Idle { anchor, rest, pending } => {
                let delta = depth - anchor;
                if delta.abs() >= params.translate_min && !rotated(&rest) {
                    let pending = pending + 1;
                    if pending >= params.debounce_frames {
                        let payload = translate_payload(delta);
                        out.push((Action::Translate, Phase::Begin, payload.clone()));
                        TranslatePhase::Active { anchor, rest, payload, delta }
                    } else {
                        TranslatePhase::Idle { anchor, rest, pending }
                    }
                } else if let Some(d) = rest_depth {
                    TranslatePhase::Idle {
                        anchor: d,
                        rest: orientation,
                        pending: 0,
                    }
                } else {
                    TranslatePhase::Idle { anchor, rest, pending: 0 }
                }
            }
            TranslatePhase::Active { anchor, rest, payload, delta: last } => {
                if rest_depth.is_some() || rotated(&rest) {
                    out.push((Action::Translate, Phase::End, payload));
                    TranslatePhase::Idle {
                        anchor: rest_depth.unwrap_or(depth),
                        rest: orientation,
                        pending: 0,
                    }
                } else {
                    let delta = depth - anchor;
                    if (delta - last).abs() >= TRANSLATE_UPDATE_EPS {
                        let payload = translate_payload(delta);
                        out.push((Action::Translate, Phase::Update, payload.clone()));
                        TranslatePhase::Active { anchor, rest, payload, delta }
                    } else {
                        TranslatePhase::Active { anchor, rest, payload, delta: last }
                    }
                }
            }
        };
    }
}
