//! Exclusivity between detectors that can fire on the same input.

use std::collections::{BTreeMap, BTreeSet};

use super::event::{Action, ActionEvent, Phase, StreamKey};

/// Does an open `by` stream suppress `target`?
fn suppresses(by: &StreamKey, target: &StreamKey) -> bool {
    match (by.action, target.action) {
        (Action::Fold, Action::Tilt | Action::Flip | Action::Translate) => {
            target.sheets.iter().any(|s| by.sheets.contains(s))
        }
        (Action::Cover, Action::Point | Action::PointDrag) => by.hand.is_some() && by.hand == target.hand,
        (Action::Collate, Action::Collocate) => by.sheet_set() == target.sheet_set(),
        _ => false,
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Arbiter {
    open: BTreeMap<StreamKey, ActionEvent>,
    /// Streams whose remaining phases are swallowed.
    muted: BTreeSet<StreamKey>,
}

impl Arbiter {
    /// Filters one frame's candidates, already sorted by priority.
    pub fn filter(&mut self, candidates: Vec<ActionEvent>) -> Vec<ActionEvent> {
        let mut out = Vec::with_capacity(candidates.len());
        for e in candidates {
            let key = e.stream_key();
            match e.phase {
                Phase::Begin => {
                    if self.open.keys().any(|k| suppresses(k, &key)) {
                        self.muted.insert(key);
                        continue;
                    }
                    let victims: Vec<StreamKey> =
                        self.open.keys().filter(|k| suppresses(&key, k)).cloned().collect();
                    out.push(e.clone());
                    self.open.insert(key, e.clone());
                    for v in victims {
                        self.cut(&v, e.time_ms, &mut out);
                    }
                }
                Phase::Update => {
                    if self.muted.contains(&key) {
                        continue;
                    }
                    self.open.insert(key, e.clone());
                    out.push(e);
                }
                Phase::End => {
                    if self.muted.remove(&key) {
                        continue;
                    }
                    self.open.remove(&key);
                    out.push(e);
                }
            }
        }
        // Forced ends were appended out of priority order.
        out.sort_by_key(|e| e.action);
        out
    }

    fn cut(&mut self, key: &StreamKey, time_ms: u64, out: &mut Vec<ActionEvent>) {
        if let Some(last) = self.open.remove(key) {
            out.push(last.with_phase(Phase::End, time_ms));
            self.muted.insert(key.clone());
        }
    }

    /// Ends every open stream of `action`; the detector's own later phases are dropped.
    pub fn force_end(&mut self, action: Action, time_ms: u64) -> Vec<ActionEvent> {
        let keys: Vec<StreamKey> = self.open.keys().filter(|k| k.action == action).cloned().collect();
        let mut out = Vec::new();
        for k in keys {
            self.cut(&k, time_ms, &mut out);
        }
        out
    }

    pub fn open_streams(&self) -> impl Iterator<Item = &ActionEvent> {
        self.open.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Uv;
    use crate::recognizer::event::{DirAxis, DoiPayload};
    use crate::scene::HandId;

    fn ev(action: Action, phase: Phase, sheet: &str, hand: Option<HandId>) -> ActionEvent {
        ActionEvent {
            action,
            phase,
            sheet_ids: vec![sheet.into()],
            hand,
            payload: DoiPayload::DirectionValue {
                axis: DirAxis::U,
                sign: 1,
                value: 0.0,
                origin: None,
            },
            time_ms: 0,
        }
    }

    #[test]
    fn fold_mutes_tilt_on_same_sheet_only() {
        let mut a = Arbiter::default();
        let out = a.filter(vec![
            ev(Action::Fold, Phase::Begin, "A", None),
            ev(Action::Tilt, Phase::Begin, "A", None),
            ev(Action::Tilt, Phase::Begin, "B", None),
        ]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].sheet_ids, vec!["B".to_string()]);
        let out = a.filter(vec![ev(Action::Tilt, Phase::Update, "A", None)]);
        assert!(out.is_empty());
        let out = a.filter(vec![ev(Action::Tilt, Phase::End, "A", None)]);
        assert!(out.is_empty());
    }

    #[test]
    fn late_suppressor_cuts_open_stream() {
        let mut a = Arbiter::default();
        a.filter(vec![ev(Action::Point, Phase::Begin, "A", Some(HandId::Left))]);
        let cover = ActionEvent {
            payload: DoiPayload::PositionArea {
                uv: Uv::new(0.5, 0.5),
                area: None,
                palm: None,
            },
            ..ev(Action::Cover, Phase::Begin, "A", Some(HandId::Left))
        };
        let out = a.filter(vec![cover]);
        let phases: Vec<_> = out.iter().map(|e| (e.action, e.phase)).collect();
        assert_eq!(phases, vec![(Action::Cover, Phase::Begin), (Action::Point, Phase::End)]);
    }

    #[test]
    fn force_end_then_swallow() {
        let mut a = Arbiter::default();
        a.filter(vec![ev(Action::PointDrag, Phase::Begin, "A", Some(HandId::Right))]);
        let ended = a.force_end(Action::PointDrag, 40);
        assert_eq!(ended.len(), 1);
        assert_eq!(ended[0].phase, Phase::End);
        assert_eq!(ended[0].time_ms, 40);
        assert!(a
            .filter(vec![ev(Action::PointDrag, Phase::Update, "A", Some(HandId::Right))])
            .is_empty());
        assert!(a
            .filter(vec![ev(Action::PointDrag, Phase::End, "A", Some(HandId::Right))])
            .is_empty());
        // A fresh stream passes again.
        assert_eq!(
            a.filter(vec![ev(Action::PointDrag, Phase::Begin, "A", Some(HandId::Right))]).len(),
            1
        );
    }
}
