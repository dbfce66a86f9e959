#![allow(dead_code)]

pub mod arb;

use std::path::PathBuf;

use paperlens_core::chart::Axis;
use paperlens_core::recognizer::{Action, Phase};
use paperlens_core::scene::SceneFrame;
use paperlens_server::{ServerMessage, Session, SessionConfig};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema").join(name);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&doc).unwrap()
}

pub fn config(charts: &str) -> SessionConfig {
    SessionConfig::load(&[fixture(&format!("charts/{charts}.json"))], None, None).unwrap()
}

pub fn feed(session: &mut Session, frames: &[SceneFrame]) -> Vec<ServerMessage> {
    frames.iter().flat_map(|f| session.handle_frame(f)).collect()
}

pub fn events(msgs: &[ServerMessage]) -> Vec<(Action, Phase)> {
    msgs.iter()
        .filter_map(|m| match m {
            ServerMessage::Event { event, .. } => Some((event.action, event.phase)),
            _ => None,
        })
        .collect()
}

pub fn charts<'a>(msgs: &'a [ServerMessage], id: &str) -> Vec<&'a serde_json::Value> {
    msgs.iter()
        .filter_map(|m| match m {
            ServerMessage::Chart { chart, .. } if chart["chart_id"] == id => Some(chart),
            _ => None,
        })
        .collect()
}

/// `(domain, base_domain)` of one axis in a rendered chart.
pub fn domain(chart: &serde_json::Value, axis: Axis) -> ([f64; 2], [f64; 2]) {
    let s = chart["scales"].as_array().unwrap().iter().find(|s| s["axis"] == axis.name()).unwrap();
    let pair = |v: &serde_json::Value| [v[0].as_f64().unwrap(), v[1].as_f64().unwrap()];
    (pair(&s["domain"]), pair(&s["base_domain"]))
}

pub fn selected(chart: &serde_json::Value) -> Vec<usize> {
    chart["selection"]["ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect()
}
