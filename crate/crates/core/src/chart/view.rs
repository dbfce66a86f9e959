use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Axis, ChartError, ChartSpec, Command, Mark, Scale, SelectMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn at(&self, t: f64) -> f64 {
        self.lo + t * self.span()
    }

    pub fn within(&self, outer: &Window) -> bool {
        self.lo >= outer.lo && self.hi <= outer.hi && self.lo < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub peer: String,
    pub field: String,
}

/// Why the current selection holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Data-unit interval `[lo, hi)` (closed at `hi` when it was the window edge).
    Interval {
        axis: Axis,
        lo: f64,
        hi: f64,
        hi_closed: bool,
        mode: SelectMode,
    },
    Link { peer: String, field: String, key: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    pub windows: BTreeMap<Axis, Window>,
    pub selection: BTreeSet<usize>,
    pub provenance: Option<Provenance>,
    pub links: BTreeSet<Link>,
}

impl ViewState {
    pub fn initial(spec: &ChartSpec) -> Self {
        Self {
            windows: spec.scales.iter().map(|(a, s)| (*a, s.base())).collect(),
            selection: BTreeSet::new(),
            provenance: None,
            links: BTreeSet::new(),
        }
    }

    pub fn window(&self, spec: &ChartSpec, axis: Axis) -> Result<Window, ChartError> {
        spec.scale(axis)?;
        Ok(self.windows[&axis])
    }

    pub fn link_to(&self, peer: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.peer == peer)
    }
}

/// Shifts `w` into `base`, or caps it at `base` when wider.
fn clamp(w: Window, base: Window) -> Window {
    if w.span() >= base.span() {
        return base;
    }
    if w.lo < base.lo {
        Window { lo: base.lo, hi: base.lo + w.span() }
    } else if w.hi > base.hi {
        Window { lo: base.hi - w.span(), hi: base.hi }
    } else {
        w
    }
}

/// Band windows cover whole categories.
fn fit(scale: &Scale, w: Window) -> Window {
    let base = scale.base();
    match scale {
        Scale::Continuous { .. } => clamp(w, base),
        Scale::Band { .. } => {
            let mut lo = w.lo.round();
            let mut hi = w.hi.round();
            if hi - lo < 1.0 {
                let mid = ((w.lo + w.hi) / 2.0).floor();
                lo = mid;
                hi = mid + 1.0;
            }
            clamp(Window { lo, hi }, base)
        }
    }
}

fn windowed_axes(spec: &ChartSpec) -> Vec<Axis> {
    spec.scales.keys().copied().collect()
}

/// Rows in `[lo, hi)` (or `[lo, hi]` when `hi_closed`) along `axis`.
pub(crate) fn rows_in(spec: &ChartSpec, axis: Axis, lo: f64, hi: f64, hi_closed: bool) -> BTreeSet<usize> {
    spec.data
        .ids()
        .filter(|&r| match spec.position(axis, r) {
            Some(x) => x >= lo && (x < hi || (hi_closed && x <= hi)),
            None => false,
        })
        .collect()
}

/// Applies a single-chart command. `LinkSelect` spans two charts and goes
/// through [`super::ChartRegistry::apply`].
pub fn apply(spec: &ChartSpec, view: &ViewState, cmd: &Command) -> Result<ViewState, ChartError> {
    cmd.validate()?;
    let mut next = view.clone();
    match cmd {
        Command::SelectInterval { axis, interval: [a, b], mode } => {
            let w = view.window(spec, *axis)?;
            let (lo, hi) = (w.at(*a), w.at(*b));
            let hi_closed = *b == 1.0 && a < b;
            let inside = rows_in(spec, *axis, lo, hi, hi_closed);
            next.selection = match mode {
                SelectMode::Replace => inside,
                SelectMode::Invert => spec.data.ids().filter(|r| !inside.contains(r)).collect(),
            };
            next.provenance = Some(Provenance::Interval {
                axis: *axis,
                lo,
                hi,
                hi_closed,
                mode: *mode,
            });
        }
        Command::Zoom { axis, window: [a, b] } => {
            let w = view.window(spec, *axis)?;
            let scale = spec.scale(*axis)?;
            next.windows.insert(*axis, fit(scale, Window { lo: w.at(*a), hi: w.at(*b) }));
        }
        Command::ZoomBy { factor, anchor } => {
            let axes = windowed_axes(spec);
            if axes.is_empty() {
                return Err(ChartError::UnknownAxis {
                    chart: spec.chart_id.clone(),
                    axis: "x".into(),
                });
            }
            for axis in axes {
                let w = view.windows[&axis];
                let c = anchor[if axis == Axis::X { 0 } else { 1 }];
                let pivot = w.at(c);
                let span = w.span() / factor;
                let z = Window {
                    lo: pivot - c * span,
                    hi: pivot + (1.0 - c) * span,
                };
                next.windows.insert(axis, fit(spec.scale(axis)?, z));
            }
        }
        Command::Pan { dx, dy } => {
            for (axis, d) in [(Axis::X, *dx), (Axis::Y, *dy)] {
                if d == 0.0 {
                    continue;
                }
                let w = view.window(spec, axis)?;
                let shift = d * w.span();
                let moved = Window {
                    lo: w.lo + shift,
                    hi: w.hi + shift,
                };
                next.windows.insert(axis, fit(spec.scale(axis)?, moved));
            }
        }
        Command::Reset => {
            let links = std::mem::take(&mut next.links);
            next = ViewState::initial(spec);
            next.links = links;
        }
        Command::LinkSelect { source, target, .. } => {
            return Err(ChartError::UnlinkedPair(source.clone(), target.clone()));
        }
    }
    Ok(next)
}

/// Row nearest to fraction `f` of the current window along `axis`. Ties go to
/// the lower row id.
pub fn pick_at_fraction(spec: &ChartSpec, view: &ViewState, axis: Axis, f: f64) -> Result<Option<usize>, ChartError> {
    let w = view.window(spec, axis)?;
    let target = w.at(f);
    Ok(nearest(spec.data.ids().filter_map(|r| spec.position(axis, r).map(|x| (r, (x - target).abs())))))
}

fn nearest(it: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    it.fold(None, |best: Option<(usize, f64)>, (r, d)| match best {
        Some((_, bd)) if bd <= d => best,
        _ => Some((r, d)),
    })
    .map(|(r, _)| r)
}

/// Mark under a sheet coordinate, for pointing at a printed chart.
pub fn pick(spec: &ChartSpec, view: &ViewState, uv: [f64; 2]) -> Option<usize> {
    match spec.mark {
        Mark::Arc => pick_arc(spec, uv),
        Mark::Bar if matches!(spec.scales.get(&Axis::X), Some(Scale::Band { .. })) => {
            let w = view.windows[&Axis::X];
            let idx = w.at(uv[0]).floor() + 0.5;
            spec.data.ids().find(|&r| spec.position(Axis::X, r) == Some(idx))
        }
        _ => {
            let norm = |axis: Axis, r: usize| -> Option<f64> {
                let w = view.windows.get(&axis)?;
                spec.position(axis, r).map(|x| (x - w.lo) / w.span())
            };
            nearest(spec.data.ids().filter_map(|r| {
                let nx = norm(Axis::X, r)?;
                let d = match norm(Axis::Y, r) {
                    Some(ny) => (nx - uv[0]).hypot(ny - uv[1]),
                    None => (nx - uv[0]).abs(),
                };
                Some((r, d))
            }))
        }
    }
}

/// Wedges run clockwise from twelve o'clock around the sheet center.
fn pick_arc(spec: &ChartSpec, uv: [f64; 2]) -> Option<usize> {
    let field = &spec.encodings.y.as_ref()?.field;
    let values: Vec<f64> = spec.data.values(field).ok()?.map(|v| v.as_f64().unwrap_or(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let (dx, dy) = (uv[0] - 0.5, uv[1] - 0.5);
    let angle = dx.atan2(dy).rem_euclid(TAU);
    let mut acc = 0.0;
    for (r, v) in values.iter().enumerate() {
        acc += v / total * TAU;
        if angle < acc {
            return Some(r);
        }
    }
    values.len().checked_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Column, ColumnType, Encoding, Encodings, ScaleType, Table, Value};
    use approx::assert_abs_diff_eq;

    fn line_0_100() -> ChartSpec {
        let rows = (0..=100).map(|i| vec![Value::Number(i as f64), Value::Number((i * i) as f64)]).collect();
        let table = Table::new(
            vec![
                Column { name: "t".into(), ty: ColumnType::Number },
                Column { name: "v".into(), ty: ColumnType::Number },
            ],
            rows,
        )
        .unwrap();
        ChartSpec::new(
            "A".into(),
            Mark::Line,
            Encodings {
                x: Encoding { field: "t".into(), scale: ScaleType::Linear },
                y: Some(Encoding { field: "v".into(), scale: ScaleType::Linear }),
                color: None,
            },
            table,
            BTreeMap::new(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn zoom_window_then_pan() {
        let spec = line_0_100();
        let v0 = ViewState::initial(&spec);
        let v1 = apply(&spec, &v0, &Command::Zoom { axis: Axis::X, window: [0.0, 0.75] }).unwrap();
        assert_eq!(v1.windows[&Axis::X], Window { lo: 0.0, hi: 75.0 });
        let v2 = apply(&spec, &v1, &Command::Pan { dx: 0.2, dy: 0.0 }).unwrap();
        assert_abs_diff_eq!(v2.windows[&Axis::X].lo, 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v2.windows[&Axis::X].hi, 90.0, epsilon = 1e-12);
    }

    #[test]
    fn zoom_factor_pair_is_identity() {
        let spec = line_0_100();
        let v0 = apply(&spec, &ViewState::initial(&spec), &Command::Zoom { axis: Axis::X, window: [0.2, 0.6] }).unwrap();
        let v1 = apply(&spec, &v0, &Command::ZoomBy { factor: 2.0, anchor: [0.5, 0.5] }).unwrap();
        let v2 = apply(&spec, &v1, &Command::ZoomBy { factor: 0.5, anchor: [0.5, 0.5] }).unwrap();
        for axis in [Axis::X, Axis::Y] {
            assert_abs_diff_eq!(v2.windows[&axis].lo, v0.windows[&axis].lo, epsilon = 1e-9);
            assert_abs_diff_eq!(v2.windows[&axis].hi, v0.windows[&axis].hi, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_and_unknown_axis() {
        let spec = line_0_100();
        let v0 = ViewState::initial(&spec);
        assert_eq!(
            apply(&spec, &v0, &Command::Zoom { axis: Axis::X, window: [0.3, 0.3] }),
            Err(ChartError::DegenerateWindow(0.3))
        );
        let mut no_y = spec.clone();
        no_y.scales.remove(&Axis::Y);
        assert!(matches!(
            apply(&no_y, &ViewState::initial(&no_y), &Command::Pan { dx: 0.0, dy: 0.1 }),
            Err(ChartError::UnknownAxis { .. })
        ));
    }

    #[test]
    fn interval_is_closed_lower_open_upper() {
        let spec = line_0_100();
        let v0 = ViewState::initial(&spec);
        let lower = apply(&spec, &v0, &Command::SelectInterval { axis: Axis::X, interval: [0.0, 0.6], mode: SelectMode::Replace }).unwrap();
        assert_eq!(lower.selection, (0..60).collect());
        let upper = apply(&spec, &v0, &Command::SelectInterval { axis: Axis::X, interval: [0.6, 1.0], mode: SelectMode::Replace }).unwrap();
        assert_eq!(upper.selection, (60..=100).collect());
    }

    #[test]
    fn pan_clamps_at_base() {
        let spec = line_0_100();
        let v0 = apply(&spec, &ViewState::initial(&spec), &Command::Zoom { axis: Axis::X, window: [0.0, 0.5] }).unwrap();
        let v1 = apply(&spec, &v0, &Command::Pan { dx: -1.0, dy: 0.0 }).unwrap();
        assert_eq!(v1.windows[&Axis::X], Window { lo: 0.0, hi: 50.0 });
    }
}
