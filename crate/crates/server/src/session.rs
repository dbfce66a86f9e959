//! One client's pipeline: recognizer, binding snapshot and chart registry.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use paperlens_core::chart::{render_spec, ChartError, ChartRegistry, ChartSpec, ChartSpecRecord, Command, DataSource, ViewState};
use paperlens_core::mapping::{
    resolve_action, translate_event, BindMode, Basis, BindingTable, ChartContext, CommandName, Gains, TargetedCommand,
};
use paperlens_core::recognizer::{Action, ActionEvent, Phase, Recognizer, StreamKey};
use paperlens_core::scene::SceneFrame;

use crate::config::SessionConfig;
use crate::protocol::{decode_client, ClientMessage, ErrorBody, ServerMessage};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub frames: u64,
    pub rejected_frames: u64,
    pub events: u64,
    pub commands: u64,
    /// Commands aimed at a sheet with no registered chart.
    pub unknown_sheet: u64,
    /// Translation diagnostics: unbound actions, pairs without semantics.
    pub dropped: u64,
    pub command_errors: u64,
    /// Wall time of each accepted frame, in microseconds.
    pub frame_latency_us: Vec<u64>,
}

impl Metrics {
    /// Latency at quantile `q` in microseconds, nearest-rank.
    pub fn latency_quantile_us(&self, q: f64) -> Option<u64> {
        if self.frame_latency_us.is_empty() {
            return None;
        }
        let mut v = self.frame_latency_us.clone();
        v.sort_unstable();
        let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
        Some(v[rank - 1])
    }
}

type OriginKey = (StreamKey, String, CommandName);

pub struct Session {
    id: String,
    recognizer: Recognizer,
    bindings: BindingTable,
    charts: ChartRegistry,
    inbound: u64,
    last_time: Option<u64>,
    origins: BTreeMap<OriginKey, ViewState>,
    metrics: Metrics,
}

impl Session {
    /// Charts in `config` that fail to load are skipped with a warning.
    pub fn new(id: impl Into<String>, config: &SessionConfig) -> Self {
        let mut charts = ChartRegistry::new();
        for spec in &config.charts {
            if let Err(e) = charts.load(spec.clone()) {
                tracing::warn!(chart = %spec.chart_id, "skipping chart: {e}");
            }
        }
        Self {
            id: id.into(),
            recognizer: Recognizer::new(config.params.clone()),
            bindings: config.bindings.clone(),
            charts,
            inbound: 0,
            last_time: None,
            origins: BTreeMap::new(),
            metrics: Metrics::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn bindings(&self) -> &BindingTable {
        &self.bindings
    }

    pub fn charts(&self) -> &ChartRegistry {
        &self.charts
    }

    /// Every chart, sent once when a client connects.
    pub fn initial_charts(&self) -> Vec<ServerMessage> {
        self.charts.ids().map(|id| self.chart_message(id, 0)).collect()
    }

    /// Decodes and dispatches one inbound text message.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        self.inbound += 1;
        match decode_client(text) {
            Ok(msg) => self.dispatch(msg),
            Err(e) => vec![self.error(e.code(), e.to_string(), None)],
        }
    }

    pub fn handle_message(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        self.inbound += 1;
        self.dispatch(msg)
    }

    fn dispatch(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        if let Some(sid) = msg.session_id() {
            if sid != self.id {
                return vec![self.error("SessionMismatch", format!("message for session {sid:?}"), None)];
            }
        }
        match msg {
            ClientMessage::Frame { frame, .. } => self.process_frame(&frame),
            ClientMessage::Bind { command, action, mode, gains, .. } => self.bind(&command, &action, mode, gains),
            ClientMessage::ResetView { chart_id, .. } => self.reset_view(&chart_id),
            ClientMessage::LoadChart { spec, .. } => self.load_chart(spec),
        }
    }

    /// Runs one frame through recognize, translate and apply.
    pub fn handle_frame(&mut self, frame: &SceneFrame) -> Vec<ServerMessage> {
        self.inbound += 1;
        self.process_frame(frame)
    }

    fn process_frame(&mut self, frame: &SceneFrame) -> Vec<ServerMessage> {
        let started = Instant::now();
        let events = match self.recognizer.step(frame) {
            Ok(events) => events,
            Err(e) => {
                self.metrics.rejected_frames += 1;
                return vec![self.error(e.code(), e.to_string(), None)];
            }
        };
        let ctx = ChartContext {
            dt_ms: self.last_time.map_or(0, |t| frame.time_ms.saturating_sub(t)),
            collocations: self
                .recognizer
                .open_streams()
                .into_iter()
                .filter(|e| e.action == Action::Collocate && e.sheet_ids.len() == 2)
                .map(|e| [e.sheet_ids[0].clone(), e.sheet_ids[1].clone()])
                .collect(),
        };
        self.last_time = Some(frame.time_ms);
        self.metrics.frames += 1;

        let mut out = Vec::with_capacity(events.len());
        let mut changed = BTreeSet::new();
        for e in &events {
            self.metrics.events += 1;
            out.push(self.event_message(e));
            let t = translate_event(e, &self.bindings, &ctx);
            self.metrics.dropped += t.diagnostics.len() as u64;
            for tc in &t.commands {
                changed.extend(self.apply_command(e, tc));
            }
            if e.phase == Phase::End {
                let key = e.stream_key();
                self.origins.retain(|(k, _, _), _| *k != key);
            }
        }
        for id in &changed {
            out.push(self.chart_message(id, self.inbound));
        }
        self.metrics.frame_latency_us.push(started.elapsed().as_micros() as u64);
        out
    }

    fn apply_command(&mut self, e: &ActionEvent, tc: &TargetedCommand) -> Vec<String> {
        let targets: Vec<&str> = match &tc.command {
            Command::LinkSelect { source, target, .. } => vec![source, target],
            _ => vec![&tc.chart_id],
        };
        if targets.iter().any(|id| !self.charts.contains(id)) {
            self.metrics.unknown_sheet += 1;
            tracing::debug!(chart = %tc.chart_id, "no chart for sheet");
            return Vec::new();
        }
        self.metrics.commands += 1;
        let result = match tc.basis {
            Basis::Current => self.charts.apply(&tc.chart_id, &tc.command),
            Basis::GestureOrigin => {
                let key = (e.stream_key(), tc.chart_id.clone(), tc.binding);
                if e.phase == Phase::Begin {
                    self.origins.remove(&key);
                }
                let origin = match self.origins.get(&key) {
                    Some(v) => v.clone(),
                    None => {
                        let v = self.charts.get(&tc.chart_id).expect("checked above").view.clone();
                        self.origins.insert(key, v.clone());
                        v
                    }
                };
                self.charts.apply_windows_from(&tc.chart_id, &origin, &tc.command)
            }
        };
        result.unwrap_or_else(|err: ChartError| {
            self.metrics.command_errors += 1;
            tracing::debug!(chart = %tc.chart_id, "command rejected: {err}");
            Vec::new()
        })
    }

    fn bind(&mut self, command: &str, action: &str, mode: BindMode, gains: Option<Gains>) -> Vec<ServerMessage> {
        let ack = self.inbound;
        let (table, removed) = match self.bindings.rebind(command, action, mode, gains) {
            Ok(r) => r,
            Err(e) => {
                return vec![ServerMessage::BindResult {
                    session_id: self.id.clone(),
                    ack,
                    ok: false,
                    command: command.to_string(),
                    action: action.to_string(),
                    error: Some(ErrorBody { code: e.code().to_string(), detail: e.to_string(), cell: e.cell() }),
                    bindings: None,
                }]
            }
        };
        self.bindings = table;
        let mut out = vec![ServerMessage::BindResult {
            session_id: self.id.clone(),
            ack,
            ok: true,
            command: command.to_string(),
            action: action.to_string(),
            error: None,
            bindings: Some(self.bindings.to_json()),
        }];
        // Gestures of an unbound action stop where they are.
        let detectors: BTreeSet<Action> = removed.iter().filter_map(|a| resolve_action(a)?.detector).collect();
        let t = self.last_time.unwrap_or(0);
        for action in detectors {
            for e in self.recognizer.force_end(action, t) {
                let key = e.stream_key();
                self.origins.retain(|(k, _, _), _| *k != key);
                self.metrics.events += 1;
                out.push(self.event_message(&e));
            }
        }
        out
    }

    fn reset_view(&mut self, chart_id: &str) -> Vec<ServerMessage> {
        match self.charts.reset(chart_id) {
            Ok(changed) => {
                self.origins.retain(|(_, c, _), _| c != chart_id);
                changed.iter().map(|id| self.chart_message(id, self.inbound)).collect()
            }
            Err(e) => vec![self.error(e.code(), e.to_string(), None)],
        }
    }

    fn load_chart(&mut self, rec: ChartSpecRecord) -> Vec<ServerMessage> {
        if let DataSource::CsvPath { csv_path, .. } = &rec.data {
            let e = ChartError::InvalidSpec(format!("csv_path {csv_path} is not accepted over the wire"));
            return vec![self.error(e.code(), e.to_string(), None)];
        }
        let loaded = ChartSpec::from_record(&rec).and_then(|spec| self.charts.load(spec));
        if let Err(e) = loaded {
            return vec![self.error(e.code(), e.to_string(), None)];
        }
        let id = rec.chart_id;
        self.origins.retain(|(_, c, _), _| *c != id);
        let mut ids: BTreeSet<String> = BTreeSet::from([id.clone()]);
        if let Some(entry) = self.charts.get(&id) {
            ids.extend(entry.view.links.iter().map(|l| l.peer.clone()));
        }
        ids.iter().map(|c| self.chart_message(c, self.inbound)).collect()
    }

    fn event_message(&self, e: &ActionEvent) -> ServerMessage {
        ServerMessage::Event { session_id: self.id.clone(), ack: self.inbound, event: e.clone() }
    }

    fn chart_message(&self, id: &str, ack: u64) -> ServerMessage {
        let entry = self.charts.get(id).expect("chart ids come from the registry");
        ServerMessage::Chart { session_id: self.id.clone(), ack, chart: render_spec(&entry.spec, &entry.view) }
    }

    /// Records an inbound line that never became a message.
    pub fn reject(&mut self, code: &str, detail: String, line: Option<usize>) -> ServerMessage {
        self.inbound += 1;
        self.error(code, detail, line)
    }

    fn error(&self, code: &str, detail: String, line: Option<usize>) -> ServerMessage {
        ServerMessage::Error { session_id: self.id.clone(), ack: self.inbound, code: code.to_string(), detail, line }
    }
}
