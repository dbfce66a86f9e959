//! Two-sheet arrangements: collate (stacked) and collocate (side by side).

use crate::geometry::{angle_between, convex_overlap_area, Uv};

use super::event::{Action, ActionEvent, DoiPayload, Layout, Phase};
use super::params::DetectorParams;
use super::surface::Surface;

const ANCHOR_UPDATE_EPS: f64 = 0.005;
/// Overlap (fraction of the smaller sheet) below which sheets count as disjoint.
const DISJOINT_OVERLAP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
enum Arrangement {
    Stacked { top: String, bottom: String, anchor: Uv },
    Adjacent { first: String, second: String, layout: Layout },
}

impl Arrangement {
    fn action(&self) -> Action {
        match self {
            Arrangement::Stacked { .. } => Action::Collate,
            Arrangement::Adjacent { .. } => Action::Collocate,
        }
    }

    fn sheets(&self) -> Vec<String> {
        match self {
            Arrangement::Stacked { top, bottom, .. } => vec![top.clone(), bottom.clone()],
            Arrangement::Adjacent { first, second, .. } => vec![first.clone(), second.clone()],
        }
    }

    fn payload(&self) -> DoiPayload {
        match self {
            Arrangement::Stacked { anchor, .. } => DoiPayload::Relative {
                anchor_uv: Some(*anchor),
                layout: None,
            },
            Arrangement::Adjacent { layout, .. } => DoiPayload::Relative {
                anchor_uv: None,
                layout: Some(*layout),
            },
        }
    }

    /// Same gesture with the same roles.
    fn same_stream(&self, other: &Arrangement) -> bool {
        self.action() == other.action() && self.sheets() == other.sheets() && {
            match (self, other) {
                (Arrangement::Adjacent { layout: a, .. }, Arrangement::Adjacent { layout: b, .. }) => a == b,
                _ => true,
            }
        }
    }
}

/// Corners of `other` in `base`'s local xy, counter-clockwise.
fn footprint_in(base: &Surface<'_>, other: &Surface<'_>) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = other
        .geom()
        .local_corners()
        .iter()
        .map(|c| {
            let w = other.pose().transform_point(c);
            let l = base.pose().inverse_transform_point(&w);
            [l.x, l.y]
        })
        .collect();
    let signed: f64 = (0..pts.len())
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    if signed < 0.0 {
        pts.reverse();
    }
    pts
}

fn rect(s: &Surface<'_>) -> Vec<[f64; 2]> {
    let g = s.geom();
    vec![[0.0, 0.0], [g.width, 0.0], [g.width, g.height], [0.0, g.height]]
}

fn sense(a: &Surface<'_>, b: &Surface<'_>, params: &DetectorParams) -> Option<Arrangement> {
    let misalign = angle_between(&a.normal(), &b.normal());
    let b_center_in_a = a.pose().inverse_transform_point(&b.center());
    let smaller = a.geom().area().min(b.geom().area());
    let overlap = convex_overlap_area(&footprint_in(a, b), &rect(a)) / smaller;

    if misalign <= params.collate_align_deg.to_radians()
        && b_center_in_a.z.abs() <= params.collate_gap
        && overlap >= params.collate_overlap
    {
        let (top, bottom) = if b_center_in_a.z >= 0.0 { (b, a) } else { (a, b) };
        let local = bottom.pose().inverse_transform_point(&top.center());
        let g = bottom.geom();
        let anchor = Uv::new(local.x / g.width, local.y / g.height).clamped();
        return Some(Arrangement::Stacked {
            top: top.id().to_string(),
            bottom: bottom.id().to_string(),
            anchor,
        });
    }

    if misalign > params.collocate_coplanar_deg.to_radians()
        || b_center_in_a.z.abs() > params.collocate_edge_gap
        || overlap > DISJOINT_OVERLAP
    {
        return None;
    }
    let fp = footprint_in(a, b);
    let (min_x, max_x, min_y, max_y) = fp.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(x0, x1, y0, y1), p| (x0.min(p[0]), x1.max(p[0]), y0.min(p[1]), y1.max(p[1])),
    );
    let (w, h) = (a.geom().width, a.geom().height);
    let gap_x = (min_x - w).max(-max_x);
    let gap_y = (min_y - h).max(-max_y);
    let (layout, gap, a_first) = if gap_x >= gap_y && gap_y < 0.0 {
        // Side by side; a is left when b sits to its right.
        (Layout::LeftRight, gap_x, min_x >= w / 2.0)
    } else if gap_y > gap_x && gap_x < 0.0 {
        // Stacked vertically in the plane; a is on top when b is below it.
        (Layout::TopBottom, gap_y, max_y <= h / 2.0)
    } else {
        return None;
    };
    if gap > params.collocate_edge_gap {
        return None;
    }
    let (first, second) = if a_first { (a, b) } else { (b, a) };
    Some(Arrangement::Adjacent {
        first: first.id().to_string(),
        second: second.id().to_string(),
        layout,
    })
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PairTracker {
    pending: Option<(Arrangement, u32)>,
    active: Option<Arrangement>,
}

fn emit(arr: &Arrangement, phase: Phase, time_ms: u64) -> ActionEvent {
    ActionEvent {
        action: arr.action(),
        phase,
        sheet_ids: arr.sheets(),
        hand: None,
        payload: arr.payload(),
        time_ms,
    }
}

impl PairTracker {
    pub fn step(
        &mut self,
        a: &Surface<'_>,
        b: &Surface<'_>,
        params: &DetectorParams,
        time_ms: u64,
        out: &mut Vec<ActionEvent>,
    ) {
        let raw = sense(a, b, params);
        if let Some(active) = self.active.take() {
            match raw {
                Some(now) if now.same_stream(&active) => {
                    let moved = match (&active, &now) {
                        (Arrangement::Stacked { anchor: p, .. }, Arrangement::Stacked { anchor: q, .. }) => {
                            (p.u - q.u).abs() >= ANCHOR_UPDATE_EPS || (p.v - q.v).abs() >= ANCHOR_UPDATE_EPS
                        }
                        _ => false,
                    };
                    if moved {
                        out.push(emit(&now, Phase::Update, time_ms));
                        self.active = Some(now);
                    } else {
                        self.active = Some(active);
                    }
                    return;
                }
                other => {
                    out.push(emit(&active, Phase::End, time_ms));
                    self.pending = other.map(|o| (o, 1));
                    return;
                }
            }
        }
        self.pending = match (self.pending.take(), raw) {
            (_, None) => None,
            (Some((first, n)), Some(now)) if first.same_stream(&now) => Some((now, n + 1)),
            (_, Some(now)) => Some((now, 1)),
        };
        if let Some((arr, n)) = &self.pending {
            if *n >= params.debounce_frames {
                out.push(emit(arr, Phase::Begin, time_ms));
                self.active = Some(arr.clone());
                self.pending = None;
            }
        }
    }

    pub fn vanish(&mut self, time_ms: u64, out: &mut Vec<ActionEvent>) {
        if let Some(active) = self.active.take() {
            out.push(emit(&active, Phase::End, time_ms));
        }
        self.pending = None;
    }
}
