//! Shared fixtures for the benchmarks under `benches/`.

use nanonet_core::{validate_config, SimConfig, ValidatedConfig};

/// Default config with `nodes` sensors and a deployment radius that keeps
/// density roughly constant as the network grows.
pub fn config(nodes: u32) -> ValidatedConfig {
    let radius = 10e-3 * (nodes as f64 / 100.0).cbrt();
    validate_config(SimConfig { node_count: nodes, deployment_radius: radius, ..SimConfig::default() })
        .expect("default-derived config is valid")
}
