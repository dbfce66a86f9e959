//! WebSocket transport: one session per connection.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use tokio::io::AsyncWriteExt;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::Mutex;
use tokio_tungstenite::tungstenite::Message;

use crate::config::SessionConfig;
use crate::protocol::{decode_client, ClientMessage};
use crate::session::Session;

/// Appends every accepted frame, from any connection, to a JSONL trace.
#[derive(Clone)]
pub struct FrameTap {
    file: Arc<Mutex<tokio::fs::File>>,
}

impl FrameTap {
    pub async fn create(path: &Path) -> std::io::Result<Self> {
        let file = tokio::fs::OpenOptions::new().create(true).append(true).open(path).await?;
        Ok(Self { file: Arc::new(Mutex::new(file)) })
    }

    async fn write(&self, line: &str) -> std::io::Result<()> {
        let mut f = self.file.lock().await;
        f.write_all(line.as_bytes()).await?;
        f.write_all(b"\n").await?;
        f.flush().await
    }
}

/// Accepts connections until the listener fails.
pub async fn serve_listener(listener: TcpListener, config: Arc<SessionConfig>, tap: Option<FrameTap>) -> std::io::Result<()> {
    let counter = Arc::new(AtomicU64::new(0));
    loop {
        let (stream, peer) = listener.accept().await?;
        let id = format!("s{}", counter.fetch_add(1, Ordering::Relaxed) + 1);
        let config = config.clone();
        let tap = tap.clone();
        tokio::spawn(async move {
            tracing::info!(session = %id, %peer, "connected");
            if let Err(e) = connection(stream, &id, &config, tap).await {
                tracing::warn!(session = %id, "connection ended: {e}");
            }
            tracing::info!(session = %id, "closed");
        });
    }
}

async fn connection(
    stream: TcpStream,
    id: &str,
    config: &SessionConfig,
    tap: Option<FrameTap>,
) -> Result<(), tokio_tungstenite::tungstenite::Error> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut tx, mut rx) = ws.split();
    let mut session = Session::new(id, config);
    for m in session.initial_charts() {
        tx.feed(Message::text(m.to_text())).await?;
    }
    tx.flush().await?;

    while let Some(msg) = rx.next().await {
        let text = match msg? {
            Message::Text(t) => t,
            Message::Binary(_) => {
                let m = session.reject("MalformedMessage", "binary frames are not accepted".into(), None);
                tx.send(Message::text(m.to_text())).await?;
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        let out = match decode_client(&text) {
            Ok(m) => {
                if let (Some(tap), ClientMessage::Frame { frame, .. }) = (&tap, &m) {
                    if let Err(e) = tap.write(&frame.to_json_line()).await {
                        tracing::error!("trace write failed: {e}");
                    }
                }
                session.handle_message(m)
            }
            Err(e) => vec![session.reject(e.code(), e.to_string(), None)],
        };
        for m in out {
            tx.feed(Message::text(m.to_text())).await?;
        }
        tx.flush().await?;
    }
    let m = session.metrics();
    tracing::info!(
        session = %id,
        frames = m.frames,
        events = m.events,
        commands = m.commands,
        unknown_sheet = m.unknown_sheet,
        command_errors = m.command_errors,
        p50_us = m.latency_quantile_us(0.5).unwrap_or(0),
        p99_us = m.latency_quantile_us(0.99).unwrap_or(0),
        "session metrics"
    );
    Ok(())
}
