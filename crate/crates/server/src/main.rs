use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use paperlens_core::geometry::Uv;
use paperlens_core::recognizer::PalmOrientation;
use paperlens_core::scene::write_trace;
use paperlens_core::sim::{self, Script};
use paperlens_server::net::{serve_listener, FrameTap};
use paperlens_server::{replay_file, SessionConfig};

#[derive(Parser)]
#[command(name = "paperlens", version, about = "Paper-sheet interaction server")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Chart config file (JSON record or array); repeatable.
    #[arg(long)]
    charts: Vec<PathBuf>,
    #[arg(long)]
    bindings: Option<PathBuf>,
    /// Detector parameters.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SessionConfig, String> {
        SessionConfig::load(&self.charts, self.bindings.as_deref(), self.params.as_deref()).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Accept WebSocket clients, one session each.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: SocketAddr,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run a JSONL trace through a headless session and write the transcript.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Transcript path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve and append every received frame to a trace file.
    Record {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: SocketAddr,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write synthetic traces: a script name, `noise`, or `all` (into a directory).
    Simulate {
        #[arg(long)]
        script: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn script_by_name(name: &str, seed: u64) -> Option<Script> {
    let s = match name {
        "noise" => sim::noise_script(seed, 10),
        "tilt_ramp" => sim::tilt_ramp_script(),
        "cover_palm_up" => sim::cover_script(PalmOrientation::PalmUp),
        "collocate_point" => sim::collocate_point_script(Uv::new(0.3, 0.5)),
        _ => sim::canonical_scripts().into_iter().find(|s| s.name == name)?,
    };
    Some(s)
}

fn simulate(name: &str, out: &Path, seed: u64) -> Result<(), String> {
    let scripts = if name == "all" {
        std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
        let mut all = sim::canonical_scripts();
        all.push(sim::noise_script(seed, 10));
        all.push(sim::collocate_point_script(Uv::new(0.3, 0.5)));
        all.into_iter().map(|s| (out.join(format!("{}.jsonl", s.name)), s)).collect()
    } else {
        let s = script_by_name(name, seed).ok_or_else(|| format!("unknown script {name:?}"))?;
        vec![(out.to_path_buf(), s)]
    };
    for (path, s) in scripts {
        write_trace(&path, &s.frames).map_err(|e| format!("{}: {e}", path.display()))?;
        eprintln!("{} frames -> {}", s.frames.len(), path.display());
    }
    Ok(())
}

async fn serve(addr: SocketAddr, config: SessionConfig, tap: Option<FrameTap>) -> Result<(), String> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("{addr}: {e}"))?;
    tracing::info!("listening on ws://{}", listener.local_addr().map_err(|e| e.to_string())?);
    tokio::select! {
        r = serve_listener(listener, Arc::new(config), tap) => r.map_err(|e| e.to_string()),
        _ = tokio::signal::ctrl_c() => {
            tracing::info!("shutting down");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Serve { addr, config } => {
            let config = config.load()?;
            runtime()?.block_on(serve(addr, config, None))?;
        }
        Cmd::Record { addr, out, config } => {
            let config = config.load()?;
            let rt = runtime()?;
            rt.block_on(async {
                let tap = FrameTap::create(&out).await.map_err(|e| format!("{}: {e}", out.display()))?;
                serve(addr, config, Some(tap)).await
            })?;
        }
        Cmd::Replay { trace, config, out } => {
            let config = config.load()?;
            let t = replay_file(&trace, &config).map_err(|e| format!("{}: {e}", trace.display()))?;
            match out {
                Some(p) => std::fs::write(&p, t.to_jsonl()).map_err(|e| format!("{}: {e}", p.display()))?,
                None => t.write_to(std::io::stdout().lock()).map_err(|e| e.to_string())?,
            }
            if t.errors > 0 {
                eprintln!("replay: {} error message(s)", t.errors);
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Simulate { script, out, seed } => simulate(&script, &out, seed)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn runtime() -> Result<tokio::runtime::Runtime, String> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
