#![allow(dead_code)]

use std::collections::BTreeMap;

use paperlens_core::recognizer::{Action, ActionEvent, Phase, Recognizer, StreamKey};
use paperlens_core::scene::SceneFrame;

/// Events tagged with the frame index that produced them.
pub fn run(frames: &[SceneFrame]) -> Vec<(usize, ActionEvent)> {
    let mut r = Recognizer::default();
    let mut out = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        for e in r.step(f).expect("valid frame") {
            out.push((i, e));
        }
    }
    out
}

pub fn begins(events: &[(usize, ActionEvent)]) -> Vec<(usize, Action)> {
    events
        .iter()
        .filter(|(_, e)| e.phase == Phase::Begin)
        .map(|(i, e)| (*i, e.action))
        .collect()
}

/// Every stream is Begin, Update*, End; returns a description of the first violation.
pub fn check_nesting(events: &[(usize, ActionEvent)]) -> Result<(), String> {
    let mut open: BTreeMap<StreamKey, u64> = BTreeMap::new();
    for (i, e) in events {
        let key = e.stream_key();
        match e.phase {
            Phase::Begin => {
                if open.insert(key.clone(), e.time_ms).is_some() {
                    return Err(format!("frame {i}: second begin for {key:?}"));
                }
            }
            Phase::Update => {
                if !open.contains_key(&key) {
                    return Err(format!("frame {i}: update without begin for {key:?}"));
                }
            }
            Phase::End => {
                if open.remove(&key).is_none() {
                    return Err(format!("frame {i}: end without begin for {key:?}"));
                }
            }
        }
    }
    Ok(())
}
