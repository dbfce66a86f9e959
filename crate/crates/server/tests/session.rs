mod common;

use common::{charts, config, domain, events, feed, fixture, selected};
use paperlens_core::chart::Axis;
use paperlens_core::geometry::Uv;
use paperlens_core::recognizer::{Action, PalmOrientation, Phase};
use paperlens_core::scene::{Crease, CreaseAxis, FlapSide};
use paperlens_core::sim;
use paperlens_server::{ClientMessage, ServerMessage, Session, SessionConfig};
use serde_json::json;

const DAY0: f64 = 18322.0; // 2020-03-01
const SPAN: f64 = 100.0;

fn low_fold(at: f64) -> sim::Script {
    sim::fold_script_with(Crease { axis: CreaseAxis::U, at, side: FlapSide::Low }, 60.0)
}

fn csv_rows(rel: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(fixture(rel))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn last_chart(msgs: &[ServerMessage], id: &str) -> serde_json::Value {
    charts(msgs, id).last().copied().cloned().unwrap_or_else(|| panic!("no chart {id} message"))
}

fn assert_window(got: [f64; 2], want: [f64; 2]) {
    assert!((got[0] - want[0]).abs() <= 1e-9 && (got[1] - want[1]).abs() <= 1e-9, "{got:?} vs {want:?}");
}

#[test]
fn fold_zooms_to_uncovered_part() {
    let mut s = Session::new("t", &config("timeline"));
    let out = feed(&mut s, &sim::fold_script().frames);
    let (win, base) = domain(&last_chart(&out, "A"), Axis::X);
    assert_eq!(base, [DAY0, DAY0 + SPAN]);
    assert_window(win, [base[0], base[0] + 0.75 * (base[1] - base[0])]);
    // The other axis and the other chart are untouched.
    let (y, ybase) = domain(&last_chart(&out, "A"), Axis::Y);
    assert_eq!(y, ybase);
    assert!(charts(&out, "B").is_empty());
}

#[test]
fn palm_down_cover_selects_lower_sixty_percent() {
    let mut s = Session::new("t", &config("timeline"));
    let out = feed(&mut s, &sim::cover_script(PalmOrientation::PalmDown).frames);
    let chart = last_chart(&out, "A");
    // Independent oracle: ISO dates compare as strings; the view starts on
    // 2020-03-01, so the lower 60% is every date before 2020-04-30.
    let want: Vec<usize> = csv_rows("data/cases_daily.csv")
        .iter()
        .enumerate()
        .filter(|(_, r)| r[0].as_str() >= "2020-03-01" && r[0].as_str() < "2020-04-30")
        .map(|(i, _)| i)
        .collect();
    assert_eq!(want.len(), 60);
    assert_eq!(selected(&chart), want);
    assert!(s.metrics().command_errors == 0);
}

#[test]
fn palm_up_cover_selects_the_covered_part() {
    let mut s = Session::new("t", &config("timeline"));
    let out = feed(&mut s, &sim::cover_script(PalmOrientation::PalmUp).frames);
    let sel = selected(&last_chart(&out, "A"));
    // [0.6, 1.0] is closed at the top edge of the view.
    assert_eq!(sel, (60..=100).collect::<Vec<_>>());
}

#[test]
fn flip_pans_one_visible_span_back() {
    let mut s = Session::new("t", &config("timeline"));
    let frames = sim::concat(&[low_fold(0.5), sim::flip_script()]);
    let out = feed(&mut s, &frames);
    let windows: Vec<[f64; 2]> = charts(&out, "A").iter().map(|c| domain(c, Axis::X).0).collect();
    assert_window(windows[0], [DAY0 + 50.0, DAY0 + 100.0]);
    assert_window(*windows.last().unwrap(), [DAY0, DAY0 + 50.0]);
    assert_eq!(events(&out).iter().filter(|e| **e == (Action::Flip, Phase::Begin)).count(), 1);
}

#[test]
fn flip_pan_clamps_at_the_base_domain() {
    let mut s = Session::new("t", &config("timeline"));
    let frames = sim::concat(&[low_fold(0.3), sim::flip_script()]);
    let out = feed(&mut s, &frames);
    let windows: Vec<[f64; 2]> = charts(&out, "A").iter().map(|c| domain(c, Axis::X).0).collect();
    assert_window(windows[0], [DAY0 + 30.0, DAY0 + 100.0]);
    // A full span (70 days) back would leave the domain; the span is kept.
    assert_window(*windows.last().unwrap(), [DAY0, DAY0 + 70.0]);

    // Already at the low edge: nothing to shift, so no chart message.
    let mut s = Session::new("t", &config("timeline"));
    let out = feed(&mut s, &sim::flip_script().frames);
    assert!(events(&out).contains(&(Action::Flip, Phase::Begin)));
    assert!(charts(&out, "A").is_empty());
}

#[test]
fn collate_links_the_datum_under_the_anchor() {
    let mut s = Session::new("t", &config("timeline"));
    let out = feed(&mut s, &sim::collate_script().frames);
    assert!(events(&out).contains(&(Action::Collate, Phase::Begin)));
    // Bottom sheet A: 30% of 100 days is 2020-03-31, row 30.
    let a = last_chart(&out, "A");
    assert_eq!(selected(&a), vec![30]);
    assert_eq!(a["marks"][30]["x"], "2020-03-31");
    let want: Vec<usize> = csv_rows("data/cases_by_continent.csv")
        .iter()
        .enumerate()
        .filter(|(_, r)| r[0] == "2020-03-31")
        .map(|(i, _)| i)
        .collect();
    assert_eq!(want.len(), 6);
    let b = last_chart(&out, "B");
    assert_eq!(selected(&b), want);
    assert_eq!(b["selection"]["provenance"]["key"], "2020-03-31");
}

#[test]
fn collocated_point_links_a_continent() {
    let mut s = Session::new("t", &config("continents"));
    // Wedges run clockwise from twelve o'clock: Africa (10.5%), then Asia
    // (26.7%). Three o'clock is inside Asia.
    let out = feed(&mut s, &sim::collocate_point_script(Uv::new(0.9, 0.5)).frames);
    assert!(events(&out).contains(&(Action::Point, Phase::Begin)));
    let b = last_chart(&out, "B");
    let want: Vec<usize> = csv_rows("data/countries.csv")
        .iter()
        .enumerate()
        .filter(|(_, r)| r[1] == "Asia")
        .map(|(i, _)| i)
        .collect();
    assert!(!want.is_empty());
    assert_eq!(selected(&b), want);
}

#[test]
fn tilt_update_pans_the_zoomed_view() {
    let mut s = Session::new("t", &config("timeline"));
    let pinch = sim::pinch_script();
    let n = pinch.frames.len() as u64;
    let frames = sim::concat(&[pinch, sim::tilt_script()]);
    let zoom = feed(&mut s, &frames[..n as usize]);
    let (zoomed, base) = domain(&last_chart(&zoom, "A"), Axis::X);
    assert!(zoomed[1] - zoomed[0] < base[1] - base[0]);
    let mut out = zoom;
    out.extend(feed(&mut s, &frames[n as usize..]));

    let tilt_frame = out
        .iter()
        .find_map(|m| match m {
            ServerMessage::Event { ack, event, .. } if event.action == Action::Tilt && event.phase == Phase::Update => {
                let same: Vec<_> = out.iter().filter(|o| o.ack() == *ack).collect();
                (same.len() == 2 && same[1].tag() == "chart").then_some(*ack)
            }
            _ => None,
        })
        .expect("a tilt update frame with a chart message");
    assert!(tilt_frame > n);
    let before = out
        .iter()
        .filter(|m| m.ack() < tilt_frame && m.tag() == "chart")
        .last()
        .map(|m| match m {
            ServerMessage::Chart { chart, .. } => domain(chart, Axis::X).0,
            _ => unreachable!(),
        })
        .unwrap();
    let after = match out.iter().find(|m| m.ack() == tilt_frame && m.tag() == "chart").unwrap() {
        ServerMessage::Chart { chart, .. } => domain(chart, Axis::X).0,
        _ => unreachable!(),
    };
    assert_ne!(before, after);
    assert!(((after[1] - after[0]) - (before[1] - before[0])).abs() < 1e-9, "pan keeps the span");
}

#[test]
fn unknown_sheet_is_a_counted_diagnostic() {
    let cfg = SessionConfig::default();
    let mut s = Session::new("t", &cfg);
    let out = feed(&mut s, &sim::fold_script().frames);
    assert!(!events(&out).is_empty());
    assert!(out.iter().all(|m| m.tag() == "event"));
    assert!(s.metrics().unknown_sheet > 0);
    assert_eq!(s.metrics().commands, 0);
}

#[test]
fn unbound_action_yields_events_only() {
    let mut s = Session::new("t", &config("timeline"));
    let r = s.handle_message(ClientMessage::Bind {
        session_id: None,
        command: "zoom".into(),
        action: "pinch".into(),
        mode: Default::default(),
        gains: None,
    });
    assert!(matches!(&r[..], [ServerMessage::BindResult { ok: true, .. }]));
    let out = feed(&mut s, &sim::fold_script().frames);
    assert!(events(&out).contains(&(Action::Fold, Phase::End)));
    assert!(out.iter().all(|m| m.tag() == "event"));
    assert!(s.metrics().dropped > 0);
}

#[test]
fn rebind_mid_drag_ends_the_drag_first() {
    let mut s = Session::new("t", &config("timeline"));
    let frames = sim::drag_script().frames;
    let mut out = Vec::new();
    let mut cut = None;
    for (i, f) in frames.iter().enumerate() {
        out.extend(s.handle_frame(f));
        if events(&out).contains(&(Action::PointDrag, Phase::Update)) {
            cut = Some(i + 1);
            break;
        }
    }
    let cut = cut.expect("drag in progress");
    let r = s.handle_text(r#"{"t":"bind","command":"pan","action":"tilt"}"#);
    assert_eq!(r[0].tag(), "bind_result");
    assert!(matches!(&r[0], ServerMessage::BindResult { ok: true, .. }));
    assert_eq!(events(&r[1..]), vec![(Action::PointDrag, Phase::End)]);
    assert!(r.iter().all(|m| m.ack() == r[0].ack()));

    let rest = feed(&mut s, &frames[cut..]);
    assert!(events(&rest).iter().all(|(a, _)| *a != Action::PointDrag));
    assert!(charts(&rest, "A").is_empty());
    assert_eq!(s.bindings().commands_for("tilt").len(), 1);
}

#[test]
fn rejected_bind_leaves_the_table() {
    let mut s = Session::new("t", &config("timeline"));
    let before = s.bindings().clone();
    let r = s.handle_text(r#"{"t":"bind","command":"select_interval","action":"shake"}"#);
    match &r[..] {
        [ServerMessage::BindResult { ok: false, error: Some(e), bindings: None, .. }] => {
            assert_eq!(e.code, "IncompatibleDoI");
            assert_eq!(e.cell.unwrap().to_string(), "(boolean, one)");
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(s.bindings(), &before);
}

#[test]
fn reset_view_restores_and_unknown_chart_errors() {
    let mut s = Session::new("t", &config("timeline"));
    feed(&mut s, &sim::fold_script().frames);
    let r = s.handle_text(r#"{"t":"reset_view","chart_id":"A"}"#);
    let (win, base) = domain(&last_chart(&r, "A"), Axis::X);
    assert_eq!(win, base);
    let r = s.handle_text(r#"{"t":"reset_view","chart_id":"Z"}"#);
    assert_eq!(r[0].error_code(), Some("UnknownChart"));
}

#[test]
fn load_chart_over_the_wire() {
    let mut s = Session::new("t", &config("timeline"));
    let msg = json!({"t": "load_chart", "spec": {
        "chart_id": "C",
        "mark": "bar",
        "encodings": {"x": {"field": "date", "scale": "temporal"}, "y": {"field": "n", "scale": "linear"}},
        "data": {"csv": "date,n\n2020-03-01,1\n2020-03-02,2\n", "types": {"date": "date"}},
        "links": [{"peer": "A", "field": "date"}]
    }});
    let r = s.handle_text(&msg.to_string());
    let ids: Vec<&str> = r.iter().map(|m| match m {
        ServerMessage::Chart { chart, .. } => chart["chart_id"].as_str().unwrap(),
        other => panic!("{other:?}"),
    }).collect();
    assert_eq!(ids, vec!["A", "C"]);
    assert!(s.charts().linked("A", "C"));

    let bad = json!({"t": "load_chart", "spec": {
        "chart_id": "D", "mark": "bar",
        "encodings": {"x": {"field": "a", "scale": "band"}},
        "data": {"csv_path": "/etc/passwd"}
    }});
    assert_eq!(s.handle_text(&bad.to_string())[0].error_code(), Some("InvalidChartSpec"));
    let bad = json!({"t": "load_chart", "spec": {
        "chart_id": "D", "mark": "bar",
        "encodings": {"x": {"field": "missing", "scale": "band"}},
        "data": {"csv": "a\n1\n"}
    }});
    assert_eq!(s.handle_text(&bad.to_string())[0].error_code(), Some("InvalidChartSpec"));
    assert!(!s.charts().contains("D"));
}

#[test]
fn non_monotonic_frame_is_dropped_with_an_error() {
    let mut s = Session::new("t", &config("timeline"));
    let frames = sim::fold_script().frames;
    feed(&mut s, &frames[..60]);
    let r = s.handle_frame(&frames[30]);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].error_code(), Some("NonMonotonicSeq"));
    // The pipeline carries on from where it was.
    let rest = feed(&mut s, &frames[60..]);
    assert!(events(&rest).contains(&(Action::Fold, Phase::End)));
    assert_eq!(s.metrics().rejected_frames, 1);
}

#[test]
fn acks_count_inbound_messages() {
    let mut s = Session::new("sx", &config("timeline"));
    assert!(s.initial_charts().iter().all(|m| m.ack() == 0));
    let r = s.handle_text("not json");
    assert_eq!(r[0].ack(), 1);
    let r = s.handle_text(r#"{"t":"reset_view","chart_id":"A","session_id":"other"}"#);
    assert_eq!((r[0].ack(), r[0].error_code()), (2, Some("SessionMismatch")));
    let r = s.handle_text(r#"{"t":"reset_view","chart_id":"A","session_id":"sx"}"#);
    assert!(r.iter().all(|m| m.ack() == 3));
    for m in &r {
        match m {
            ServerMessage::Chart { session_id, .. } => assert_eq!(session_id, "sx"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn latency_quantile_is_nearest_rank() {
    let m = paperlens_server::Metrics { frame_latency_us: (1..=100).rev().collect(), ..Default::default() };
    assert_eq!(m.latency_quantile_us(0.99), Some(99));
    assert_eq!(m.latency_quantile_us(0.5), Some(50));
    assert_eq!(paperlens_server::Metrics::default().latency_quantile_us(0.99), None);
}
