//! One function per subcommand.

use nanonet_core::energy::{build_chain, stationary_distribution};
use nanonet_core::engine::{step, sweep};
use nanonet_core::mcoutage::{mc_outage, mc_outage_paired};
use nanonet_core::report;
use nanonet_core::topology::deploy;
use nanonet_core::{validate_config, McRun, SimConfig, ValidatedConfig, WorldState};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, McArgs, SimulateArgs, SweepArgs};
use crate::output::OutDir;
use crate::CliError;

fn load_config(cli: &Cli) -> Result<ValidatedConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => SimConfig::from_config_file(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(validate_config(cfg)?)
}

/// `start..end` with `steps` evenly spaced points (ends included), or a
/// comma-separated list.
pub fn parse_values(text: &str, steps: usize) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("`{s}` is not a number")))
    };
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        return match steps {
            0 => Err(CliError::Usage("--steps must be >= 1".into())),
            1 => Ok(vec![a]),
            n => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(num).collect()
}

fn parse_count(text: &str, what: &str) -> Result<u64, CliError> {
    let bad = || CliError::Usage(format!("{what} must be a positive integer, got `{text}`"));
    let v: f64 = text.trim().parse().map_err(|_| bad())?;
    if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(bad())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let mut out = OutDir::create(&cli.out, cli.format)?;
    let config_text = cfg.to_config_string();
    out.text("config.toml", &config_text)?;

    let extra = match &cli.command {
        Command::Deploy => deploy_cmd(&cfg, &mut out)?,
        Command::Simulate(a) => simulate_cmd(&cfg, a, &mut out)?,
        Command::Sweep(a) => sweep_cmd(&cfg, a, &mut out)?,
        Command::McOutage(a) => mc_cmd(&cfg, a, &mut out)?,
        Command::Chain => chain_cmd(&cfg, &mut out)?,
    };

    let mut manifest = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "config_sha256": hex(&Sha256::digest(config_text.as_bytes())),
        "seed": cfg.seed,
        "format": match cli.format { crate::args::Format::Csv => "csv", crate::args::Format::Json => "json" },
        "outputs": out.written(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut manifest, extra) {
        m.extend(e);
    }
    out.json("manifest.json", &manifest)
}

fn deploy_cmd(cfg: &ValidatedConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let dep = deploy(cfg);
    let world = WorldState::from_deployment(cfg.clone(), dep.clone())?;
    out.table("coordinates", |w| report::write_coordinates(w, &dep))?;
    out.table("clusters", |w| report::write_clusters(w, &world.clusters))?;
    Ok(json!({
        "nodes": dep.sensor_count(),
        "layers": cfg.layer_count,
        "clusters": world.clusters.len(),
    }))
}

fn simulate_cmd(cfg: &ValidatedConfig, a: &SimulateArgs, out: &mut OutDir) -> Result<Value, CliError> {
    let mut world = WorldState::new(cfg.clone())?;
    out.table("clusters", |w| report::write_clusters(w, &world.clusters))?;
    let mut traces = Vec::with_capacity(a.cycles as usize);
    for _ in 0..a.cycles {
        traces.push(step(&mut world)?);
    }
    let interval_ps = (cfg.message_interval * 1e12).round() as u64;
    out.table("cycles", |w| report::write_cycle_summary(w, &traces))?;
    out.table("timeline", |w| report::write_timelines(w, &traces, interval_ps))?;
    if a.trace {
        out.table("events", |w| report::write_events(w, &traces, interval_ps))?;
    }
    Ok(json!({
        "cycles": a.cycles,
        "delivered_packets": traces.iter().map(|t| t.delivered_packets).sum::<u64>(),
        "generated_packets": traces.iter().map(|t| t.generated_packets).sum::<u64>(),
    }))
}

fn sweep_cmd(cfg: &ValidatedConfig, a: &SweepArgs, out: &mut OutDir) -> Result<Value, CliError> {
    let values = parse_values(&a.values, a.steps)?;
    let table = sweep(cfg, &a.axis, &values)?;
    out.table("metrics", |w| report::write_metrics(w, &table))?;
    Ok(json!({ "axis": a.axis, "points": values.len(), "crossover_m": table.crossover_m }))
}

fn mc_cmd(cfg: &ValidatedConfig, a: &McArgs, out: &mut OutDir) -> Result<Value, CliError> {
    let ks = a
        .k
        .split(',')
        .map(|s| parse_count(s, "--k").and_then(|k| u32::try_from(k).map_err(|_| CliError::Usage(format!("--k {k} too large")))))
        .collect::<Result<Vec<u32>, _>>()?;
    let trials = match &a.trials {
        Some(t) => parse_count(t, "--trials")?,
        None => cfg.trials,
    };
    let axis = parse_values(&a.gamma_db, a.steps)?;
    let run = McRun::calibrated(trials, ks.clone(), axis, cfg.seed);
    let points = if a.paired { mc_outage_paired(&run)? } else { mc_outage(&run)? };
    out.table("mc_outage", |w| report::write_mc(w, &points))?;
    Ok(json!({
        "k": ks,
        "trials": trials,
        "paired": a.paired,
        "sigma_db": run.sigma_db,
        "spectral_efficiency": run.spectral_efficiency,
    }))
}

fn chain_cmd(cfg: &ValidatedConfig, out: &mut OutDir) -> Result<Value, CliError> {
    let power = cfg.average_consume_power();
    let chain = build_chain(&cfg.energy, power)?;
    let pi = stationary_distribution(&chain)?;
    out.table("chain", |w| report::write_chain(w, &chain, &pi))?;
    Ok(json!({ "states": chain.states(), "consume_power_w": power }))
}
