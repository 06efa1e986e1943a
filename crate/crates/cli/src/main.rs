//! `nanonet`: deploy, simulate, sweep and Monte Carlo runs from the command
//! line. Every run writes its tables plus `config.toml` and
//! `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 1 configuration or argument error, 2 runtime
//! error, 3 output I/O error. Failures print one JSON object on stderr.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::FromArgMatches;
use thiserror::Error;

use args::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] nanonet_core::ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] nanonet_core::EngineError),
    #[error(transparent)]
    Energy(#[from] nanonet_core::EnergyError),
    #[error(transparent)]
    MonteCarlo(#[from] nanonet_core::mcoutage::McError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Engine(_) | CliError::Energy(_) | CliError::MonteCarlo(_) => 2,
            CliError::Output { .. } => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "config",
            2 => "runtime",
            _ => "output",
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Config(nanonet_core::ConfigError::Io { path, .. }) | CliError::Output { path, .. } => {
                v["path"] = path.clone().into();
            }
            CliError::Config(e) => {
                if let Some(field) = e.field() {
                    v["field"] = field.into();
                }
            }
            _ => {}
        }
        v
    }
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let matches = match args::command().try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let text = text.trim().strip_prefix("error: ").unwrap_or(text.trim());
            return fail(CliError::Usage(text.to_string()));
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return fail(CliError::Usage(e.to_string())),
    };
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

/// Sizes the global pool from `NANONET_THREADS` when set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NANONET_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("NANONET_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}
