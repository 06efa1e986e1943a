//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nanonet_core::netmodel::CONFIG_KEYS;

#[derive(Debug, Parser)]
#[command(name = "nanonet", version, about = "Energy-harvesting THz body-area nanonetwork simulator")]
pub struct Cli {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place sensors, register layers and elect cluster heads.
    Deploy,
    /// Run transmission cycles.
    Simulate(SimulateArgs),
    /// Sweep one parameter and tabulate energy, capacity and outage.
    Sweep(SweepArgs),
    /// Monte Carlo fused-link outage against the analytic curve.
    McOutage(McArgs),
    /// Energy-state chain and its stationary distribution.
    Chain,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Deploy => "deploy",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::McOutage(_) => "mc-outage",
            Command::Chain => "chain",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub cycles: u64,
    /// Also write the per-event log.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// distance, p_out, links or theta.
    #[arg(long)]
    pub axis: String,
    /// `start..end` (with --steps) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    /// Points in a `start..end` range, endpoints included.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Comma-separated link counts.
    #[arg(long, default_value = "1,2,4")]
    pub k: String,
    /// Trials per point; the config value when omitted. Accepts `1e6`.
    #[arg(long)]
    pub trials: Option<String>,
    /// Mean link SINR axis in dB: `start..end` (with --steps) or a list.
    #[arg(long, default_value = "0..20", allow_hyphen_values = true)]
    pub gamma_db: String,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    /// Share draws across link counts.
    #[arg(long)]
    pub paired: bool,
}

fn keys_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Config keys (TOML, one flat table):\n");
    for (key, unit, desc) in CONFIG_KEYS {
        s.push_str(&format!("  {key:width$}  [{unit}]  {desc}\n"));
    }
    s.push_str("\nEnvironment: NANONET_THREADS caps worker threads.\n");
    s.push_str("Exit codes: 1 config/argument error, 2 runtime error, 3 output I/O error.");
    s
}

pub fn command() -> clap::Command {
    Cli::command().after_help(keys_help())
}
