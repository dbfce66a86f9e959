//! Streaming action recognition over scene frames.

mod arbiter;
mod event;
mod hand;
mod pair;
mod params;
mod sheet;
mod surface;

use std::collections::BTreeMap;

pub use event::{
    Action, ActionEvent, AxisInterval, DirAxis, DoiPayload, Layout, PalmOrientation, Phase, StreamKey, UvAxis,
};
pub use params::{DetectorParams, ParamsError};

use crate::scene::{HandId, SceneError, SceneFrame};
use arbiter::Arbiter;
use hand::HandTracker;
use pair::PairTracker;
use sheet::SheetTracker;
use surface::Surface;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RecognizerError {
    #[error("frame seq {got} does not follow {last}")]
    NonMonotonicSeq { last: u64, got: u64 },
    #[error("frame time {got} ms precedes {last} ms")]
    NonMonotonicTime { last: u64, got: u64 },
    #[error(transparent)]
    Malformed(#[from] SceneError),
}

impl RecognizerError {
    pub fn code(&self) -> &'static str {
        match self {
            RecognizerError::NonMonotonicSeq { .. } => "NonMonotonicSeq",
            RecognizerError::NonMonotonicTime { .. } => "NonMonotonicTime",
            RecognizerError::Malformed(_) => "MalformedFrame",
        }
    }
}

/// All detector state for one session. Rejected frames leave it untouched.
#[derive(Debug, Clone)]
pub struct Recognizer {
    params: DetectorParams,
    last: Option<(u64, u64)>,
    hands: [HandTracker; 2],
    sheets: BTreeMap<String, SheetTracker>,
    pairs: BTreeMap<(String, String), PairTracker>,
    arbiter: Arbiter,
}

pub type RecognizerState = Recognizer;

impl Default for Recognizer {
    fn default() -> Self {
        Self::new(DetectorParams::default())
    }
}

impl Recognizer {
    pub fn new(params: DetectorParams) -> Self {
        Self {
            params,
            last: None,
            hands: [HandTracker::new(HandId::Left), HandTracker::new(HandId::Right)],
            sheets: BTreeMap::new(),
            pairs: BTreeMap::new(),
            arbiter: Arbiter::default(),
        }
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.last.map(|(s, _)| s)
    }

    pub fn step(&mut self, frame: &SceneFrame) -> Result<Vec<ActionEvent>, RecognizerError> {
        if let Some((seq, time)) = self.last {
            if frame.seq <= seq {
                return Err(RecognizerError::NonMonotonicSeq { last: seq, got: frame.seq });
            }
            if frame.time_ms < time {
                return Err(RecognizerError::NonMonotonicTime { last: time, got: frame.time_ms });
            }
        }
        frame.validate()?;
        self.last = Some((frame.seq, frame.time_ms));

        let t = frame.time_ms;
        let params = &self.params;
        let surfaces: Vec<Surface<'_>> = frame.sheets().into_iter().map(Surface::from).collect();
        let mut raw = Vec::new();

        for tracker in &mut self.hands {
            tracker.step(frame.hand(tracker.id()), &surfaces, params, t, &mut raw);
        }

        let present: Vec<&str> = surfaces.iter().map(|s| s.id()).collect();
        self.sheets.retain(|id, tracker| {
            let keep = present.contains(&id.as_str());
            if !keep {
                tracker.vanish(t, &mut raw);
            }
            keep
        });
        for s in &surfaces {
            self.sheets
                .entry(s.id().to_string())
                .or_insert_with(|| SheetTracker::new(s.id()))
                .step(s, &frame.camera, params, t, &mut raw);
        }

        self.pairs.retain(|(a, b), tracker| {
            let keep = present.contains(&a.as_str()) && present.contains(&b.as_str());
            if !keep {
                tracker.vanish(t, &mut raw);
            }
            keep
        });
        for (i, a) in surfaces.iter().enumerate() {
            for b in &surfaces[i + 1..] {
                let (a, b) = if a.id() <= b.id() { (a, b) } else { (b, a) };
                self.pairs
                    .entry((a.id().to_string(), b.id().to_string()))
                    .or_default()
                    .step(a, b, params, t, &mut raw);
            }
        }

        raw.sort_by_key(|e| e.action);
        Ok(self.arbiter.filter(raw))
    }

    /// Ends every open stream of `action` now; its detector's remaining phases
    /// for those streams are swallowed.
    pub fn force_end(&mut self, action: Action, time_ms: u64) -> Vec<ActionEvent> {
        self.arbiter.force_end(action, time_ms)
    }

    /// Streams that have begun and not yet ended, last phase included.
    pub fn open_streams(&self) -> Vec<ActionEvent> {
        self.arbiter.open_streams().cloned().collect()
    }
}
