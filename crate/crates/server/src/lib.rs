//! Session server for paper-sheet chart interaction: frames in, action events
//! and rendered charts out, over WebSocket or from recorded traces.

pub mod config;
pub mod net;
pub mod protocol;
pub mod replay;
pub mod session;

pub use config::{load_charts, ConfigError, SessionConfig};
pub use protocol::{decode_client, decode_server, ClientMessage, DecodeError, ErrorBody, ServerMessage};
pub use replay::{replay_file, replay_reader, Transcript};
pub use session::{Metrics, Session};
