//! Headless sessions over JSONL traces.

use std::io::{BufRead, Write};
use std::path::Path;

use paperlens_core::scene::{TraceError, TraceReader};

use crate::config::SessionConfig;
use crate::protocol::ServerMessage;
use crate::session::Session;

pub const REPLAY_SESSION: &str = "replay";

#[derive(Debug, Default)]
pub struct Transcript {
    pub messages: Vec<ServerMessage>,
    /// Error messages among `messages`.
    pub errors: usize,
    pub frames: u64,
}

impl Transcript {
    /// One JSON message per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for m in &self.messages {
            s.push_str(&m.to_text());
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())?;
        w.flush()
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.errors > 0)
    }
}

/// Feeds every frame of `reader` through a fresh session. A line that does
/// not decode ends the replay with `error{MalformedFrame, line}`.
pub fn replay_reader(reader: impl BufRead, config: &SessionConfig) -> Transcript {
    let mut session = Session::new(REPLAY_SESSION, config);
    let mut t = Transcript::default();
    for item in TraceReader::new(reader) {
        match item {
            Ok(frame) => {
                t.frames += 1;
                t.messages.extend(session.handle_frame(&frame));
            }
            Err(e) => {
                let line = e.line();
                let detail = match &e {
                    TraceError::Line { source, .. } => source.to_string(),
                    TraceError::Io(io) => io.to_string(),
                };
                t.messages.push(session.reject("MalformedFrame", detail, line));
                break;
            }
        }
    }
    t.errors = t.messages.iter().filter(|m| m.is_error()).count();
    t
}

pub fn replay_file(path: &Path, config: &SessionConfig) -> std::io::Result<Transcript> {
    let f = std::fs::File::open(path)?;
    Ok(replay_reader(std::io::BufReader::new(f), config))
}
