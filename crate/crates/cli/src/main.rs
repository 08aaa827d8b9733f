//! `vsens`: batch simulation, file inspection and the session server.
//!
//! Exit codes: 0 success, 1 I/O or runtime failure, 2 invalid input
//! (usage, validation or parse errors).

mod inspect;
mod serve;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "vsens",
    version,
    about = "Virtual sensor simulation on motion capture clips"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session config to the end and write one CSV + metadata file per sensor.
    Simulate(simulate::Args),
    /// Summarize a .bvh or .obj file.
    Inspect(inspect::Args),
    /// Serve the HTTP + WebSocket session API.
    Serve(serve::Args),
}

/// Failure with the process exit code it maps to.
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

pub(crate) fn display(path: &std::path::Path) -> String {
    path.display().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VSENS_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Inspect(args) => inspect::run(args),
        Command::Serve(args) => serve::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
