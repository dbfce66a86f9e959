//! Wire messages. One JSON object per WebSocket text frame (or per line in a
//! transcript), discriminated by `"t"`.

use paperlens_core::chart::ChartSpecRecord;
use paperlens_core::mapping::{BindMode, Cell, Gains};
use paperlens_core::recognizer::ActionEvent;
use paperlens_core::scene::{decode_frame, SceneFrame};
use serde::{Deserialize, Serialize};

pub const CLIENT_TAGS: [&str; 4] = ["frame", "bind", "reset_view", "load_chart"];
pub const SERVER_TAGS: [&str; 4] = ["event", "chart", "bind_result", "error"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Frame {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        frame: SceneFrame,
    },
    Bind {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        command: String,
        action: String,
        #[serde(default)]
        mode: BindMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gains: Option<Gains>,
    },
    ResetView {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        chart_id: String,
    },
    LoadChart {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        spec: ChartSpecRecord,
    },
}

impl ClientMessage {
    pub fn frame(frame: SceneFrame) -> Self {
        ClientMessage::Frame { session_id: None, frame }
    }

    pub fn session_id(&self) -> Option<&str> {
        match self {
            ClientMessage::Frame { session_id, .. }
            | ClientMessage::Bind { session_id, .. }
            | ClientMessage::ResetView { session_id, .. }
            | ClientMessage::LoadChart { session_id, .. } => session_id.as_deref(),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("client message serializes")
    }
}

/// Rejection reason carried by `bind_result` and `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub detail: String,
    /// Feasibility cell that failed, for binding rejections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServerMessage {
    Event {
        session_id: String,
        ack: u64,
        event: ActionEvent,
    },
    Chart {
        session_id: String,
        ack: u64,
        chart: serde_json::Value,
    },
    BindResult {
        session_id: String,
        ack: u64,
        ok: bool,
        command: String,
        action: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<ErrorBody>,
        /// The whole table after a successful bind.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bindings: Option<serde_json::Value>,
    },
    Error {
        session_id: String,
        ack: u64,
        code: String,
        detail: String,
        /// Trace line, when replaying a file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        line: Option<usize>,
    },
}

impl ServerMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            ServerMessage::Event { .. } => "event",
            ServerMessage::Chart { .. } => "chart",
            ServerMessage::BindResult { .. } => "bind_result",
            ServerMessage::Error { .. } => "error",
        }
    }

    pub fn ack(&self) -> u64 {
        match self {
            ServerMessage::Event { ack, .. }
            | ServerMessage::Chart { ack, .. }
            | ServerMessage::BindResult { ack, .. }
            | ServerMessage::Error { ack, .. } => *ack,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, ServerMessage::Error { .. })
    }

    pub fn error_code(&self) -> Option<&str> {
        match self {
            ServerMessage::Error { code, .. } => Some(code),
            ServerMessage::BindResult { error: Some(e), .. } => Some(&e.code),
            _ => None,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

/// Why an inbound text could not become a [`ClientMessage`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("not a JSON object: {0}")]
    MalformedMessage(String),
    #[error("unknown message type {0:?}")]
    UnknownMessageType(String),
    #[error("{0}")]
    MalformedFrame(String),
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::MalformedMessage(_) => "MalformedMessage",
            DecodeError::UnknownMessageType(_) => "UnknownMessageType",
            DecodeError::MalformedFrame(_) => "MalformedFrame",
        }
    }
}

/// Decodes a client message. Frame bodies are checked with the same rules as
/// trace lines, so a bad frame reports `MalformedFrame` rather than a generic
/// message error.
pub fn decode_client(text: &str) -> Result<ClientMessage, DecodeError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| DecodeError::MalformedMessage(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| DecodeError::MalformedMessage("expected an object".into()))?;
    let t = match obj.get("t") {
        Some(serde_json::Value::String(t)) => t.as_str(),
        Some(_) => return Err(DecodeError::MalformedMessage("\"t\" must be a string".into())),
        None => return Err(DecodeError::MalformedMessage("missing \"t\"".into())),
    };
    if !CLIENT_TAGS.contains(&t) {
        return Err(DecodeError::UnknownMessageType(t.to_string()));
    }
    if t == "frame" {
        let session_id = match obj.get("session_id") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(DecodeError::MalformedMessage("session_id must be a string".into())),
        };
        if let Some(k) = obj.keys().find(|k| !["t", "session_id", "frame"].contains(&k.as_str())) {
            return Err(DecodeError::MalformedMessage(format!("unknown field {k:?}")));
        }
        let record = obj.get("frame").ok_or_else(|| DecodeError::MalformedFrame("missing frame".into()))?;
        let frame = decode_frame(record).map_err(|e| DecodeError::MalformedFrame(e.to_string()))?;
        return Ok(ClientMessage::Frame { session_id, frame });
    }
    serde_json::from_value(v).map_err(|e| DecodeError::MalformedMessage(e.to_string()))
}

pub fn decode_server(text: &str) -> Result<ServerMessage, serde_json::Error> {
    serde_json::from_str(text)
}
