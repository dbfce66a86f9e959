//! Per-hand contact gestures: point, point&drag, pinch and cover.
//!
//! Each frame a hand is classified into at most one raw contact (cover
//! outranks pinch outranks a single index touch). A contact must persist
//! for the debounce window before it becomes a gesture; after a gesture is
//! broken by a partial lift the hand must fully release before a new one.

use crate::geometry::Uv;
use crate::scene::{HandFrame, HandId, Joint};

use super::event::{Action, ActionEvent, AxisInterval, DirAxis, DoiPayload, PalmOrientation, Phase, UvAxis};
use super::params::DetectorParams;
use super::surface::Surface;

const UPDATE_EPS: f64 = 1e-9;
const COVER_UPDATE_EPS: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Cover,
    Pinch,
    Touch,
}

#[derive(Debug, Clone, PartialEq)]
enum Contact {
    Cover {
        sheet: String,
        uv: Uv,
        area: (f64, f64),
        palm: PalmOrientation,
    },
    Pinch {
        sheet: String,
        center: Uv,
        separation: f64,
    },
    Touch {
        sheet: String,
        uv: Uv,
    },
}

impl Contact {
    fn kind(&self) -> Kind {
        match self {
            Contact::Cover { .. } => Kind::Cover,
            Contact::Pinch { .. } => Kind::Pinch,
            Contact::Touch { .. } => Kind::Touch,
        }
    }

    fn sheet(&self) -> &str {
        match self {
            Contact::Cover { sheet, .. } | Contact::Pinch { sheet, .. } | Contact::Touch { sheet, .. } => sheet,
        }
    }

    fn same_gesture(&self, other: &Contact) -> bool {
        self.kind() == other.kind() && self.sheet() == other.sheet()
    }
}

fn nearest_contact<'a>(
    surfaces: &[Surface<'a>],
    p: &nalgebra::Vector3<f64>,
    max_dist: f64,
) -> Option<(Surface<'a>, Uv)> {
    surfaces
        .iter()
        .filter_map(|s| s.contact(p, max_dist).map(|(uv, d)| (*s, uv, d.abs())))
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(s, uv, _)| (s, uv))
}

fn sense(hand: &HandFrame, surfaces: &[Surface<'_>], params: &DetectorParams) -> Option<Contact> {
    if let Some(palm) = hand.joint(Joint::PalmCenter) {
        for s in surfaces {
            let (palm_uv, palm_dist) = s.plane(palm);
            if !palm_uv.is_unit() || palm_dist.abs() > params.cover_palm_dist {
                continue;
            }
            let touching = Joint::FINGERTIPS
                .iter()
                .filter_map(|j| hand.joint(*j))
                .filter(|tip| s.contact(tip, params.contact_dist).is_some())
                .count();
            if touching < params.cover_min_fingertips {
                continue;
            }
            let (lo, hi) = hand
                .joints
                .values()
                .map(|p| s.plane(p).0.u.clamp(0.0, 1.0))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u), hi.max(u)));
            let palm = if hand.palm_normal.dot(&s.normal()) < 0.0 {
                PalmOrientation::PalmDown
            } else {
                PalmOrientation::PalmUp
            };
            return Some(Contact::Cover {
                sheet: s.id().to_string(),
                uv: palm_uv.clamped(),
                area: (lo, hi),
                palm,
            });
        }
    }

    let index = hand.joint(Joint::IndexTip)?;
    let (index_surface, index_uv) = nearest_contact(surfaces, index, params.contact_dist)?;
    if let Some(thumb) = hand.joint(Joint::ThumbTip) {
        if let Some((thumb_surface, thumb_uv)) = nearest_contact(surfaces, thumb, params.contact_dist) {
            if thumb_surface.id() == index_surface.id() {
                return Some(Contact::Pinch {
                    sheet: index_surface.id().to_string(),
                    center: Uv::new((thumb_uv.u + index_uv.u) / 2.0, (thumb_uv.v + index_uv.v) / 2.0),
                    separation: (thumb - index).norm(),
                });
            }
        }
    }
    Some(Contact::Touch {
        sheet: index_surface.id().to_string(),
        uv: index_uv,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum State {
    Idle,
    Pending {
        first: Contact,
        frames: u32,
    },
    Touching {
        sheet: String,
        start: Uv,
        last: Uv,
        drag: Option<UvAxis>,
    },
    Pinching {
        sheet: String,
        center: Uv,
        start_separation: f64,
        ratio: f64,
    },
    Covering {
        sheet: String,
        payload: DoiPayload,
    },
    /// Waiting for every digit to leave the sheets.
    Release,
}

#[derive(Debug, Clone)]
pub(crate) struct HandTracker {
    id: HandId,
    state: State,
}

impl HandTracker {
    pub fn new(id: HandId) -> Self {
        Self {
            id,
            state: State::Idle,
        }
    }

    pub fn id(&self) -> HandId {
        self.id
    }

    fn event(&self, action: Action, phase: Phase, sheet: &str, payload: DoiPayload, time_ms: u64) -> ActionEvent {
        ActionEvent {
            action,
            phase,
            sheet_ids: vec![sheet.to_string()],
            hand: Some(self.id),
            payload,
            time_ms,
        }
    }

    pub fn step(
        &mut self,
        hand: Option<&HandFrame>,
        surfaces: &[Surface<'_>],
        params: &DetectorParams,
        time_ms: u64,
        out: &mut Vec<ActionEvent>,
    ) {
        let raw = hand.and_then(|h| sense(h, surfaces, params));
        let state = std::mem::replace(&mut self.state, State::Idle);
        self.state = match state {
            State::Idle => self.pending_or_idle(raw, params, time_ms, out),
            State::Release => {
                if raw.is_none() {
                    State::Idle
                } else {
                    State::Release
                }
            }
            State::Pending { first, frames } => match raw {
                Some(c) if c.same_gesture(&first) => {
                    let frames = frames + 1;
                    if frames >= params.debounce_frames {
                        self.activate(first, c, time_ms, out)
                    } else {
                        State::Pending { first, frames }
                    }
                }
                other => self.pending_or_idle(other, params, time_ms, out),
            },
            State::Touching { sheet, start, last, drag } => match raw {
                Some(Contact::Touch { sheet: s, uv }) if s == sheet => {
                    self.touch_moved(sheet, start, last, drag, uv, params, time_ms, out)
                }
                None => {
                    match drag {
                        Some(axis) => {
                            let p = drag_payload(start, last, axis);
                            out.push(self.event(Action::PointDrag, Phase::End, &sheet, p, time_ms));
                        }
                        None => {
                            let p = DoiPayload::PositionArea { uv: start, area: None, palm: None };
                            out.push(self.event(Action::Point, Phase::Begin, &sheet, p.clone(), time_ms));
                            out.push(self.event(Action::Point, Phase::End, &sheet, p, time_ms));
                        }
                    }
                    State::Idle
                }
                Some(other) => {
                    if let Some(axis) = drag {
                        let p = drag_payload(start, last, axis);
                        out.push(self.event(Action::PointDrag, Phase::End, &sheet, p, time_ms));
                    }
                    self.pending_or_idle(Some(other), params, time_ms, out)
                }
            },
            State::Pinching { sheet, center, start_separation, ratio } => match raw {
                Some(Contact::Pinch { sheet: s, separation, .. }) if s == sheet => {
                    let next = separation / start_separation;
                    if (next - ratio).abs() > UPDATE_EPS {
                        let p = pinch_payload(center, next);
                        out.push(self.event(Action::Pinch, Phase::Update, &sheet, p, time_ms));
                    }
                    State::Pinching { sheet, center, start_separation, ratio: next }
                }
                other => {
                    let p = pinch_payload(center, ratio);
                    out.push(self.event(Action::Pinch, Phase::End, &sheet, p, time_ms));
                    if other.is_some() {
                        State::Release
                    } else {
                        State::Idle
                    }
                }
            },
            State::Covering { sheet, payload } => match raw {
                Some(c @ Contact::Cover { .. }) if c.sheet() == sheet => {
                    let next = cover_payload(&c);
                    if cover_changed(&payload, &next) {
                        out.push(self.event(Action::Cover, Phase::Update, &sheet, next.clone(), time_ms));
                        State::Covering { sheet, payload: next }
                    } else {
                        State::Covering { sheet, payload }
                    }
                }
                other => {
                    out.push(self.event(Action::Cover, Phase::End, &sheet, payload, time_ms));
                    if other.is_some() {
                        State::Release
                    } else {
                        State::Idle
                    }
                }
            },
        };
    }

    fn pending_or_idle(
        &mut self,
        raw: Option<Contact>,
        params: &DetectorParams,
        time_ms: u64,
        out: &mut Vec<ActionEvent>,
    ) -> State {
        match raw {
            None => State::Idle,
            Some(c) if params.debounce_frames <= 1 => self.activate(c.clone(), c, time_ms, out),
            Some(c) => State::Pending { first: c, frames: 1 },
        }
    }

    fn activate(&mut self, first: Contact, now: Contact, time_ms: u64, out: &mut Vec<ActionEvent>) -> State {
        match (first, now) {
            (Contact::Touch { sheet, uv: start }, Contact::Touch { uv, .. }) => State::Touching {
                sheet,
                start,
                last: uv,
                drag: None,
            },
            (_, Contact::Pinch { sheet, center, separation }) => {
                out.push(self.event(Action::Pinch, Phase::Begin, &sheet, pinch_payload(center, 1.0), time_ms));
                State::Pinching {
                    sheet,
                    center,
                    start_separation: separation.max(f64::MIN_POSITIVE),
                    ratio: 1.0,
                }
            }
            (_, c @ Contact::Cover { .. }) => {
                let payload = cover_payload(&c);
                let sheet = c.sheet().to_string();
                out.push(self.event(Action::Cover, Phase::Begin, &sheet, payload.clone(), time_ms));
                State::Covering { sheet, payload }
            }
            (_, c) => State::Pending { first: c, frames: 1 },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn touch_moved(
        &mut self,
        sheet: String,
        start: Uv,
        last: Uv,
        drag: Option<UvAxis>,
        uv: Uv,
        params: &DetectorParams,
        time_ms: u64,
        out: &mut Vec<ActionEvent>,
    ) -> State {
        let (du, dv) = (uv.u - start.u, uv.v - start.v);
        let drag = match drag {
            Some(axis) => {
                if (uv.u - last.u).abs() > UPDATE_EPS || (uv.v - last.v).abs() > UPDATE_EPS {
                    out.push(self.event(Action::PointDrag, Phase::Update, &sheet, drag_payload(start, uv, axis), time_ms));
                }
                Some(axis)
            }
            None if du.abs().max(dv.abs()) >= params.drag_min => {
                let axis = if du.abs() >= dv.abs() { UvAxis::U } else { UvAxis::V };
                out.push(self.event(Action::PointDrag, Phase::Begin, &sheet, drag_payload(start, uv, axis), time_ms));
                Some(axis)
            }
            None => None,
        };
        State::Touching {
            sheet,
            start,
            last: uv,
            drag,
        }
    }
}

fn drag_payload(start: Uv, now: Uv, axis: UvAxis) -> DoiPayload {
    let d = match axis {
        UvAxis::U => now.u - start.u,
        UvAxis::V => now.v - start.v,
    };
    DoiPayload::DirectionValue {
        axis: match axis {
            UvAxis::U => DirAxis::U,
            UvAxis::V => DirAxis::V,
        },
        sign: if d >= 0.0 { 1 } else { -1 },
        value: d.abs(),
        origin: Some(start),
    }
}

fn pinch_payload(center: Uv, ratio: f64) -> DoiPayload {
    DoiPayload::DirectionValue {
        axis: DirAxis::U,
        sign: if ratio >= 1.0 { 1 } else { -1 },
        value: ratio,
        origin: Some(center),
    }
}

fn cover_payload(c: &Contact) -> DoiPayload {
    match c {
        Contact::Cover { uv, area, palm, .. } => DoiPayload::PositionArea {
            uv: *uv,
            area: Some(AxisInterval {
                axis: UvAxis::U,
                lo: area.0,
                hi: area.1,
            }),
            palm: Some(*palm),
        },
        _ => unreachable!("cover payload from a non-cover contact"),
    }
}

fn cover_changed(a: &DoiPayload, b: &DoiPayload) -> bool {
    match (a, b) {
        (
            DoiPayload::PositionArea { uv: ua, area: Some(aa), palm: pa },
            DoiPayload::PositionArea { uv: ub, area: Some(ab), palm: pb },
        ) => {
            pa != pb
                || (aa.lo - ab.lo).abs() >= COVER_UPDATE_EPS
                || (aa.hi - ab.hi).abs() >= COVER_UPDATE_EPS
                || (ua.u - ub.u).abs() >= COVER_UPDATE_EPS
                || (ua.v - ub.v).abs() >= COVER_UPDATE_EPS
        }
        _ => true,
    }
}
