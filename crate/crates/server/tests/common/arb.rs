use std::collections::BTreeMap;

use nalgebra::{UnitQuaternion, Vector3};
use paperlens_core::chart::{render_spec, ChartSpec, ChartSpecRecord, ViewState};
use paperlens_core::geometry::{Pose, SheetGeometry, Uv};
use paperlens_core::mapping::{BindMode, Cell, DoiClass, Gains, PaperCount};
use paperlens_core::recognizer::{Action, ActionEvent, AxisInterval, DirAxis, DoiPayload, Layout, PalmOrientation, Phase, UvAxis};
use paperlens_core::scene::{Crease, CreaseAxis, FlapSide, HandFrame, HandId, Joint, Panel, SceneFrame};
use paperlens_server::{ClientMessage, ErrorBody, ServerMessage};
use proptest::prelude::*;
use serde_json::json;

pub fn arb_vec(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

pub fn arb_pose() -> impl Strategy<Value = Pose> {
    (arb_vec(2.0), arb_vec(3.0)).prop_map(|(p, r)| Pose::new(p, UnitQuaternion::from_scaled_axis(r)))
}

pub fn arb_hand(id: HandId) -> impl Strategy<Value = HandFrame> {
    const JOINTS: [Joint; 6] =
        [Joint::ThumbTip, Joint::IndexTip, Joint::MiddleTip, Joint::RingTip, Joint::LittleTip, Joint::PalmCenter];
    (prop::collection::btree_map(0usize..6, arb_vec(1.0), 0..=6), arb_vec(1.0).prop_filter("nonzero", |v| v.norm() > 1e-3))
        .prop_map(move |(joints, n)| HandFrame {
            hand: id,
            joints: joints.into_iter().map(|(k, v)| (JOINTS[k], v)).collect::<BTreeMap<_, _>>(),
            palm_normal: n.normalize(),
        })
}

pub fn arb_frame() -> impl Strategy<Value = SceneFrame> {
    let sheet = (arb_pose(), arb_pose(), 0.05..0.5f64, 0.05..0.5f64, prop::option::of((any::<bool>(), 0.01..0.99f64, any::<bool>())));
    (
        any::<u32>(),
        any::<u32>(),
        arb_pose(),
        prop::collection::vec(sheet, 0..3),
        prop::option::of(arb_hand(HandId::Left)),
        prop::option::of(arb_hand(HandId::Right)),
    )
        .prop_map(|(seq, t, camera, sheets, l, r)| {
            let mut panels = Vec::new();
            for (i, (base, flap, w, h, crease)) in sheets.into_iter().enumerate() {
                let id = format!("sheet{i}");
                let geom = SheetGeometry::new(w, h).unwrap();
                panels.push(Panel::base(id.clone(), base, geom));
                if let Some((u, at, high)) = crease {
                    let axis = if u { CreaseAxis::U } else { CreaseAxis::V };
                    let side = if high { FlapSide::High } else { FlapSide::Low };
                    panels.push(Panel::flap(id, flap, geom, Crease { axis, at, side }));
                }
            }
            SceneFrame { seq: seq as u64, time_ms: t as u64, camera, panels, hands: l.into_iter().chain(r).collect() }
        })
}

pub fn arb_event() -> impl Strategy<Value = ActionEvent> {
    (
        prop::sample::select(Action::ALL.to_vec()),
        prop::sample::select(vec![Phase::Begin, Phase::Update, Phase::End]),
        -1.0..2.0f64,
        -1.0..2.0f64,
        any::<bool>(),
        any::<u32>(),
    )
        .prop_map(|(action, phase, a, b, flag, t)| {
            let sign = if flag { 1 } else { -1 };
            let payload = match action {
                Action::Cover => DoiPayload::PositionArea {
                    uv: Uv::new(a, b),
                    area: Some(AxisInterval { axis: if flag { UvAxis::U } else { UvAxis::V }, lo: a.min(b).clamp(0.0, 1.0), hi: a.max(b).clamp(0.0, 1.0) }),
                    palm: Some(if flag { PalmOrientation::PalmDown } else { PalmOrientation::PalmUp }),
                },
                Action::Point => DoiPayload::PositionArea { uv: Uv::new(a, b), area: None, palm: None },
                Action::Collate => DoiPayload::Relative { anchor_uv: Some(Uv::new(a, b)), layout: None },
                Action::Collocate => DoiPayload::Relative {
                    anchor_uv: None,
                    layout: Some(if flag { Layout::LeftRight } else { Layout::TopBottom }),
                },
                Action::PointDrag | Action::Pinch => DoiPayload::DirectionValue { axis: DirAxis::U, sign, value: a.abs(), origin: Some(Uv::new(b, a)) },
                Action::Translate => DoiPayload::DirectionValue { axis: DirAxis::Depth, sign, value: a.abs(), origin: None },
                _ => DoiPayload::DirectionValue { axis: DirAxis::V, sign, value: b.abs(), origin: None },
            };
            let sheet_ids = match action {
                Action::Collate | Action::Collocate => vec!["B".into(), "A".into()],
                _ => vec!["A".into()],
            };
            let hand = matches!(action, Action::Cover | Action::Point | Action::PointDrag | Action::Pinch)
                .then_some(if flag { HandId::Right } else { HandId::Left });
            ActionEvent { action, phase, sheet_ids, hand, payload, time_ms: t as u64 }
        })
}

pub fn chart_record() -> ChartSpecRecord {
    serde_json::from_value(json!({
        "chart_id": "C",
        "mark": "bar",
        "encodings": {"x": {"field": "k", "scale": "band"}, "y": {"field": "n", "scale": "linear"}},
        "data": {"csv": "k,n\na,1\nb,2.5\nc,-3\n"},
        "links": [{"peer": "A", "field": "k"}]
    }))
    .unwrap()
}

pub fn arb_sid() -> impl Strategy<Value = Option<String>> {
    prop::option::of("[a-z][a-z0-9]{0,6}")
}

pub fn arb_client() -> impl Strategy<Value = ClientMessage> {
    prop_oneof![
        (arb_sid(), arb_frame()).prop_map(|(session_id, frame)| ClientMessage::Frame { session_id, frame }),
        (arb_sid(), "[a-z_]{1,12}", "[a-z_]{1,12}", any::<bool>(), any::<bool>()).prop_map(|(session_id, command, action, add, g)| {
            ClientMessage::Bind {
                session_id,
                command,
                action,
                mode: if add { BindMode::Add } else { BindMode::Replace },
                gains: g.then(Gains::default),
            }
        }),
        (arb_sid(), "[A-Za-z0-9]{1,8}").prop_map(|(session_id, chart_id)| ClientMessage::ResetView { session_id, chart_id }),
        arb_sid().prop_map(|session_id| ClientMessage::LoadChart { session_id, spec: chart_record() }),
    ]
}

pub fn arb_server() -> impl Strategy<Value = ServerMessage> {
    let spec = ChartSpec::from_record(&chart_record()).unwrap();
    let chart = render_spec(&spec, &ViewState::initial(&spec));
    let code = prop::sample::select(vec!["MalformedFrame", "NonMonotonicSeq", "UnknownChart", "SessionMismatch"]);
    let bind_code = prop::sample::select(vec!["IncompatibleDoI", "PaperCountMismatch", "UnknownAction"]);
    prop_oneof![
        ("[a-z0-9]{1,6}", any::<u32>(), arb_event()).prop_map(|(session_id, ack, event)| ServerMessage::Event { session_id, ack: ack as u64, event }),
        ("[a-z0-9]{1,6}", any::<u32>()).prop_map(move |(session_id, ack)| ServerMessage::Chart { session_id, ack: ack as u64, chart: chart.clone() }),
        ("[a-z0-9]{1,6}", any::<u32>(), any::<bool>(), bind_code, ".{0,20}").prop_map(|(session_id, ack, ok, code, detail)| ServerMessage::BindResult {
            session_id,
            ack: ack as u64,
            ok,
            command: "zoom".into(),
            action: "fold".into(),
            error: (!ok).then(|| ErrorBody {
                code: code.into(),
                detail,
                cell: Some(Cell { doi: DoiClass::Boolean, paper_count: PaperCount::Many }),
            }),
            bindings: ok.then(|| json!({"zoom": ["fold"]})),
        }),
        ("[a-z0-9]{1,6}", any::<u32>(), code, ".{0,20}", prop::option::of(1usize..10_000)).prop_map(|(session_id, ack, code, detail, line)| ServerMessage::Error {
            session_id,
            ack: ack as u64,
            code: code.into(),
            detail,
            line,
        }),
    ]
}
