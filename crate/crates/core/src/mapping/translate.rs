//! ActionEvent → chart commands under a binding table.

use serde::Serialize;

use crate::chart::{Axis, Command, DatumSelector, SelectMode};
use crate::recognizer::{Action, ActionEvent, DirAxis, DoiPayload, PalmOrientation, Phase, UvAxis};

use super::{BindingTable, CommandName, Gains};

/// What the session knows beyond the event itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartContext {
    /// Time since the previous frame.
    pub dt_ms: u64,
    /// Sheet pairs currently collocated.
    pub collocations: Vec<[String; 2]>,
}

impl ChartContext {
    fn collocated_peer(&self, sheet: &str) -> Option<&str> {
        self.collocations.iter().find_map(|[a, b]| {
            if a == sheet {
                Some(b.as_str())
            } else if b == sheet {
                Some(a.as_str())
            } else {
                None
            }
        })
    }
}

/// Which view a command is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// The view as it stood when the gesture began: the gesture's total
    /// effect so far replaces its previous effect.
    GestureOrigin,
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetedCommand {
    pub chart_id: String,
    pub binding: CommandName,
    pub command: Command,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    UnboundAction { action: Action },
    /// Bound and feasible, but the pair has no chart semantics here.
    UnsupportedPair { action: String, command: CommandName },
    /// Payload did not carry what the pair needs.
    PayloadMismatch { action: Action, command: CommandName },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Translation {
    pub commands: Vec<TargetedCommand>,
    pub diagnostics: Vec<Diagnostic>,
}

fn chart_axis(a: DirAxis) -> Option<Axis> {
    match a {
        DirAxis::U => Some(Axis::X),
        DirAxis::V => Some(Axis::Y),
        DirAxis::Depth => None,
    }
}

fn uv_axis(a: UvAxis) -> Axis {
    match a {
        UvAxis::U => Axis::X,
        UvAxis::V => Axis::Y,
    }
}

fn sorted_unit(a: f64, b: f64) -> [f64; 2] {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    [lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)]
}

/// Normalized range left uncovered by a flap of `value` on side `sign`.
fn uncovered(sign: i8, value: f64) -> [f64; 2] {
    if sign > 0 {
        [0.0, (1.0 - value).clamp(0.0, 1.0)]
    } else {
        [value.clamp(0.0, 1.0), 1.0]
    }
}

fn pan(axis: Axis, d: f64) -> Command {
    match axis {
        Axis::X => Command::Pan { dx: d, dy: 0.0 },
        Axis::Y => Command::Pan { dx: 0.0, dy: d },
    }
}

enum Outcome {
    Emit(Command, Basis, String),
    /// Phase carries no command for this pair.
    Nothing,
    Unsupported,
    Mismatch,
}

fn translate_one(e: &ActionEvent, binding: &str, command: CommandName, gains: &Gains, ctx: &ChartContext) -> Outcome {
    use Outcome::*;
    let sheet = e.sheet_ids.first().cloned().unwrap_or_default();
    let live = matches!(e.phase, Phase::Begin | Phase::Update);
    match (command, e.action, &e.payload) {
        (CommandName::SelectInterval, Action::Cover, DoiPayload::PositionArea { area, palm, .. }) => {
            let Some(iv) = area else { return Mismatch };
            if !live {
                return Nothing;
            }
            let (interval, mode) = match palm.unwrap_or(PalmOrientation::PalmDown) {
                PalmOrientation::PalmUp => ([iv.lo, iv.hi], SelectMode::Replace),
                PalmOrientation::PalmDown if iv.hi >= 1.0 => ([0.0, iv.lo], SelectMode::Replace),
                PalmOrientation::PalmDown if iv.lo <= 0.0 => ([iv.hi, 1.0], SelectMode::Replace),
                PalmOrientation::PalmDown => ([iv.lo, iv.hi], SelectMode::Invert),
            };
            Emit(
                Command::SelectInterval { axis: uv_axis(iv.axis), interval, mode },
                Basis::Current,
                sheet,
            )
        }
        (CommandName::SelectInterval, Action::Fold, DoiPayload::DirectionValue { axis, sign, value, .. }) => {
            let Some(axis) = chart_axis(*axis) else { return Mismatch };
            if !live {
                return Nothing;
            }
            Emit(
                Command::SelectInterval { axis, interval: uncovered(*sign, *value), mode: SelectMode::Replace },
                Basis::Current,
                sheet,
            )
        }
        (CommandName::SelectInterval, Action::PointDrag, DoiPayload::DirectionValue { axis, sign, value, origin }) => {
            let (Some(axis), Some(o)) = (chart_axis(*axis), origin) else { return Mismatch };
            if !live {
                return Nothing;
            }
            let start = if axis == Axis::X { o.u } else { o.v };
            let end = start + f64::from(*sign) * value;
            Emit(
                Command::SelectInterval { axis, interval: sorted_unit(start, end), mode: SelectMode::Replace },
                Basis::Current,
                sheet,
            )
        }
        (CommandName::Zoom, Action::Fold, DoiPayload::DirectionValue { axis, sign, value, .. }) => {
            let Some(axis) = chart_axis(*axis) else { return Mismatch };
            if !live {
                return Nothing;
            }
            let window = uncovered(*sign, *value);
            if window[0] >= window[1] {
                return Nothing;
            }
            Emit(Command::Zoom { axis, window }, Basis::GestureOrigin, sheet)
        }
        (CommandName::Zoom, Action::Pinch, DoiPayload::DirectionValue { value, origin, .. }) => {
            if !live {
                return Nothing;
            }
            if !(value.is_finite() && *value > 0.0) {
                return Mismatch;
            }
            let anchor = origin.map_or([0.5, 0.5], |o| [o.u.clamp(0.0, 1.0), o.v.clamp(0.0, 1.0)]);
            Emit(Command::ZoomBy { factor: *value, anchor }, Basis::GestureOrigin, sheet)
        }
        (CommandName::Zoom, Action::Translate, DoiPayload::DirectionValue { sign, value, .. }) => {
            if !live {
                return Nothing;
            }
            // Closer (sign -1) zooms in.
            let steps = -f64::from(*sign) * value / gains.translate_zoom_step_m;
            Emit(
                Command::ZoomBy { factor: gains.translate_zoom_factor.powf(steps), anchor: [0.5, 0.5] },
                Basis::GestureOrigin,
                sheet,
            )
        }
        (CommandName::Pan, Action::PointDrag, DoiPayload::DirectionValue { axis, sign, value, .. }) => {
            let Some(axis) = chart_axis(*axis) else { return Mismatch };
            if !live {
                return Nothing;
            }
            // Content follows the finger, so the window moves against it.
            Emit(pan(axis, -f64::from(*sign) * value * gains.drag_pan_span), Basis::GestureOrigin, sheet)
        }
        (CommandName::Pan, Action::Tilt, DoiPayload::DirectionValue { axis, sign, value, .. }) => {
            let Some(axis) = chart_axis(*axis) else { return Mismatch };
            let past = value.to_degrees() - gains.tilt_deadzone_deg;
            if !live || past <= 0.0 || ctx.dt_ms == 0 {
                return Nothing;
            }
            let d = f64::from(*sign) * past * gains.tilt_pan_rate * (ctx.dt_ms as f64 / 1000.0);
            Emit(pan(axis, d), Basis::Current, sheet)
        }
        (CommandName::Pan, Action::Flip, DoiPayload::DirectionValue { axis, sign, .. }) => {
            let Some(axis) = chart_axis(*axis) else { return Mismatch };
            if e.phase != Phase::Begin {
                return Nothing;
            }
            Emit(pan(axis, f64::from(*sign) * gains.flip_pan_span), Basis::Current, sheet)
        }
        (CommandName::LinkSelect, Action::Collate, DoiPayload::Relative { anchor_uv, .. }) => {
            let (Some(a), [top, bottom]) = (anchor_uv, e.sheet_ids.as_slice()) else { return Mismatch };
            if !live {
                return Nothing;
            }
            Emit(
                Command::LinkSelect {
                    source: bottom.clone(),
                    target: top.clone(),
                    datum: DatumSelector::AtFraction { axis: Axis::X, fraction: a.u.clamp(0.0, 1.0) },
                },
                Basis::Current,
                bottom.clone(),
            )
        }
        (CommandName::LinkSelect, Action::Point, DoiPayload::PositionArea { uv, .. }) if binding == "collocate_point" => {
            if e.phase != Phase::Begin {
                return Nothing;
            }
            let Some(peer) = ctx.collocated_peer(&sheet) else { return Nothing };
            Emit(
                Command::LinkSelect {
                    source: sheet.clone(),
                    target: peer.to_string(),
                    datum: DatumSelector::NearestUv { uv: [uv.u.clamp(0.0, 1.0), uv.v.clamp(0.0, 1.0)] },
                },
                Basis::Current,
                sheet,
            )
        }
        _ => Unsupported,
    }
}

/// Deterministic in `(e, table, ctx)`. Commands follow command-name order,
/// then binding order.
pub fn translate_event(e: &ActionEvent, table: &BindingTable, ctx: &ChartContext) -> Translation {
    let mut out = Translation::default();
    let mut bound = false;
    for (command, binding) in table.iter() {
        let Some(resolved) = super::resolve_action(&binding.action) else { continue };
        if resolved.detector != Some(e.action) {
            continue;
        }
        bound = true;
        match translate_one(e, resolved.name, command, &binding.gains, ctx) {
            Outcome::Emit(cmd, basis, chart_id) => out.commands.push(TargetedCommand {
                chart_id,
                binding: command,
                command: cmd,
                basis,
            }),
            Outcome::Nothing => {}
            Outcome::Unsupported => out.diagnostics.push(Diagnostic::UnsupportedPair {
                action: binding.action.clone(),
                command,
            }),
            Outcome::Mismatch => out.diagnostics.push(Diagnostic::PayloadMismatch { action: e.action, command }),
        }
    }
    if !bound {
        out.diagnostics.push(Diagnostic::UnboundAction { action: e.action });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Uv;
    use crate::mapping::BindMode;
    use crate::recognizer::AxisInterval;

    fn ev(action: Action, phase: Phase, payload: DoiPayload) -> ActionEvent {
        ActionEvent {
            action,
            phase,
            sheet_ids: vec!["A".into()],
            hand: None,
            payload,
            time_ms: 0,
        }
    }

    fn dv(axis: DirAxis, sign: i8, value: f64) -> DoiPayload {
        DoiPayload::DirectionValue { axis, sign, value, origin: None }
    }

    fn only(t: Translation) -> Command {
        assert_eq!(t.commands.len(), 1, "{t:?}");
        t.commands.into_iter().next().unwrap().command
    }

    #[test]
    fn fold_zooms_to_uncovered_part() {
        let t = translate_event(&ev(Action::Fold, Phase::Begin, dv(DirAxis::U, 1, 0.25)), &BindingTable::default(), &ChartContext::default());
        assert_eq!(only(t), Command::Zoom { axis: Axis::X, window: [0.0, 0.75] });
    }

    #[test]
    fn cover_palm_orientation_picks_selection() {
        let payload = |palm| DoiPayload::PositionArea {
            uv: Uv::new(0.8, 0.5),
            area: Some(AxisInterval { axis: UvAxis::U, lo: 0.6, hi: 1.0 }),
            palm: Some(palm),
        };
        let table = BindingTable::default();
        let ctx = ChartContext::default();
        let down = translate_event(&ev(Action::Cover, Phase::Begin, payload(PalmOrientation::PalmDown)), &table, &ctx);
        assert_eq!(
            only(down),
            Command::SelectInterval { axis: Axis::X, interval: [0.0, 0.6], mode: SelectMode::Replace }
        );
        let up = translate_event(&ev(Action::Cover, Phase::Begin, payload(PalmOrientation::PalmUp)), &table, &ctx);
        assert_eq!(
            only(up),
            Command::SelectInterval { axis: Axis::X, interval: [0.6, 1.0], mode: SelectMode::Replace }
        );
    }

    #[test]
    fn tilt_pans_at_rate_past_deadzone() {
        let ctx = ChartContext { dt_ms: 1000, ..Default::default() };
        let e = ev(Action::Tilt, Phase::Update, dv(DirAxis::U, 1, 25f64.to_radians()));
        match only(translate_event(&e, &BindingTable::default(), &ctx)) {
            Command::Pan { dx, dy } => {
                assert!((dx - 0.20).abs() < 1e-12);
                assert_eq!(dy, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flip_pans_one_span_on_begin_only() {
        let table = BindingTable::default();
        let ctx = ChartContext::default();
        let begin = translate_event(&ev(Action::Flip, Phase::Begin, dv(DirAxis::U, -1, 3.0)), &table, &ctx);
        assert_eq!(only(begin), Command::Pan { dx: -1.0, dy: 0.0 });
        let end = translate_event(&ev(Action::Flip, Phase::End, dv(DirAxis::U, -1, 3.0)), &table, &ctx);
        assert!(end.commands.is_empty());
    }

    #[test]
    fn translate_closer_doubles() {
        let e = ev(Action::Translate, Phase::Update, dv(DirAxis::Depth, -1, 0.10));
        match only(translate_event(&e, &BindingTable::default(), &ChartContext::default())) {
            Command::ZoomBy { factor, anchor } => {
                assert!((factor - 2.0).abs() < 1e-12);
                assert_eq!(anchor, [0.5, 0.5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collate_selects_from_bottom() {
        let mut e = ev(
            Action::Collate,
            Phase::Begin,
            DoiPayload::Relative { anchor_uv: Some(Uv::new(0.3, 0.5)), layout: None },
        );
        e.sheet_ids = vec!["top".into(), "bottom".into()];
        let t = translate_event(&e, &BindingTable::default(), &ChartContext::default());
        assert_eq!(t.commands[0].chart_id, "bottom");
        assert_eq!(
            t.commands[0].command,
            Command::LinkSelect {
                source: "bottom".into(),
                target: "top".into(),
                datum: DatumSelector::AtFraction { axis: Axis::X, fraction: 0.3 },
            }
        );
    }

    #[test]
    fn point_links_only_while_collocated() {
        let e = ev(
            Action::Point,
            Phase::Begin,
            DoiPayload::PositionArea { uv: Uv::new(0.4, 0.5), area: None, palm: None },
        );
        let table = BindingTable::default();
        assert!(translate_event(&e, &table, &ChartContext::default()).commands.is_empty());
        let ctx = ChartContext { dt_ms: 16, collocations: vec![["A".into(), "B".into()]] };
        match only(translate_event(&e, &table, &ctx)) {
            Command::LinkSelect { source, target, .. } => assert_eq!((source.as_str(), target.as_str()), ("A", "B")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbound_action_is_a_diagnostic() {
        let (table, _) = BindingTable::default().rebind("pan", "tilt", BindMode::Replace, None).unwrap();
        let t = translate_event(&ev(Action::Flip, Phase::Begin, dv(DirAxis::U, 1, 3.0)), &table, &ChartContext::default());
        assert!(t.commands.is_empty());
        assert_eq!(t.diagnostics, vec![Diagnostic::UnboundAction { action: Action::Flip }]);
    }
}
