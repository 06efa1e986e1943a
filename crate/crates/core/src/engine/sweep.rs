//! Parameter sweeps producing the per-point metrics table, and the
//! single-hop/two-hop energy crossover.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hop_energy_per_bit, EngineError};
use crate::channel::{
    capacity, fusion_outage, outage_capacity, outage_single, received_power, to_db, DbNormal,
};
use crate::energy::{p_es, p_es_rate};
use crate::netmodel::{derive_seed, SimConfig, ValidatedConfig};

const SWEEP_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Source to destination distance, m.
    Distance,
    /// Outage probability used for the outage capacity.
    OutageTarget,
    /// Number of cooperative links.
    Links,
    /// Energy-saving rate constant, 1/J.
    Theta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::OutageTarget => "p_out",
            SweepAxis::Links => "links",
            SweepAxis::Theta => "theta",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, EngineError> {
        match s {
            "distance" => Ok(SweepAxis::Distance),
            "p_out" => Ok(SweepAxis::OutageTarget),
            "links" => Ok(SweepAxis::Links),
            "theta" => Ok(SweepAxis::Theta),
            other => Err(EngineError::UnknownAxis(other.to_string())),
        }
    }
}

/// One sweep point. Energies are J/bit, capacities bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub axis: String,
    pub value: f64,
    pub distance_m: f64,
    pub energy_single_j_per_bit: f64,
    /// Two equal hops over the midpoint.
    pub energy_multi_j_per_bit: f64,
    pub p_es: f64,
    pub p_es_rate: f64,
    pub capacity_single_bps: f64,
    pub capacity_multi_bps: f64,
    pub outage_capacity_bps: f64,
    /// Single link at the SINR threshold.
    pub outage_probability: f64,
    /// All of `coop_links` identical links in outage.
    pub fusion_outage_probability: f64,
    pub absorption_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub axis: SweepAxis,
    pub rows: Vec<MetricsRow>,
    /// Distance above which two hops beat one, under this config.
    pub crossover_m: Option<f64>,
}

impl MetricsTable {
    pub const COLUMNS: [&'static str; 13] = [
        "axis",
        "value",
        "distance_m",
        "energy_single_j_per_bit",
        "energy_multi_j_per_bit",
        "p_es",
        "p_es_rate",
        "capacity_single_bps",
        "capacity_multi_bps",
        "outage_capacity_bps",
        "outage_probability",
        "fusion_outage_probability",
        "absorption_per_m",
    ];
}

/// Applies one axis value. Returns the config and the link distance.
fn point_config(base: &SimConfig, axis: SweepAxis, value: f64) -> Result<(SimConfig, f64), EngineError> {
    let bad = || EngineError::InvalidSweepValue { axis: axis.name(), value };
    let mut cfg = base.clone();
    let mut d = base.sweep_distance;
    match axis {
        SweepAxis::Distance if value > 0.0 && value.is_finite() => d = value,
        SweepAxis::OutageTarget if (0.0..=1.0).contains(&value) => cfg.target_outage = value,
        SweepAxis::Links if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 => {
            cfg.coop_links = value as u32
        }
        SweepAxis::Theta if value > 0.0 && value.is_finite() => cfg.theta = value,
        _ => return Err(bad()),
    }
    Ok((cfg, d))
}

fn evaluate(cfg: &SimConfig, axis: SweepAxis, value: f64, d: f64, seed: u64) -> Result<MetricsRow, EngineError> {
    let ch = &cfg.channel;
    let single = hop_energy_per_bit(d, cfg)?;
    let half = hop_energy_per_bit(d / 2.0, cfg)?;
    let mean_snr = received_power(cfg.tx_power, d, 0.0, ch)? / ch.noise_power;
    let half_snr = received_power(cfg.tx_power, d / 2.0, 0.0, ch)? / ch.noise_power;

    let shadow = Normal::new(0.0, ch.shadowing_sigma_db).expect("validated sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = ch.bandwidth;
    let (mut sum_single, mut sum_multi) = (0.0, 0.0);
    for _ in 0..cfg.trials {
        let x0: f64 = shadow.sample(&mut rng);
        let x1: f64 = shadow.sample(&mut rng);
        let x2: f64 = shadow.sample(&mut rng);
        sum_single += capacity(&[(b, mean_snr * 10f64.powf(x0 / 10.0))]);
        // Two-hop throughput is limited by its weaker hop.
        let weaker = x1.min(x2);
        sum_multi += capacity(&[(b, half_snr * 10f64.powf(weaker / 10.0))]);
    }
    let trials = cfg.trials as f64;

    let th_db = ch.sinr_threshold_db;
    let sigma = ch.shadowing_sigma_db;
    let link = DbNormal::new(to_db(mean_snr), sigma);
    // Rate whose decode-and-forward threshold equals the SINR threshold.
    let rate = b * (1.0 + ch.sinr_threshold()).log2();
    let fusion = fusion_outage(&vec![link; cfg.coop_links as usize], 1, rate, b)?;

    Ok(MetricsRow {
        axis: axis.name().to_string(),
        value,
        distance_m: d,
        energy_single_j_per_bit: single,
        energy_multi_j_per_bit: 2.0 * half,
        p_es: p_es(half, half, cfg.theta),
        p_es_rate: p_es_rate(half, half, cfg.theta),
        capacity_single_bps: sum_single / trials,
        capacity_multi_bps: sum_multi / trials,
        outage_capacity_bps: outage_capacity(b, mean_snr, cfg.target_outage),
        outage_probability: outage_single(th_db, to_db(mean_snr), sigma),
        fusion_outage_probability: fusion,
        absorption_per_m: ch.absorption,
    })
}

/// One row per value, computed in parallel and returned in input order.
/// Point `i` draws from its own seed, so results do not depend on the
/// thread count.
pub fn sweep(cfg: &ValidatedConfig, axis: &str, values: &[f64]) -> Result<MetricsTable, EngineError> {
    let axis: SweepAxis = axis.parse()?;
    let base = derive_seed(cfg.seed, SWEEP_STREAM);
    let points = values
        .iter()
        .map(|&v| point_config(cfg, axis, v).map(|(c, d)| (c, d, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, (c, d, v))| evaluate(c, axis, *v, *d, derive_seed(base, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsTable { axis, rows, crossover_m: energy_crossover(cfg) })
}

/// Distance `d*` beyond which `2 E(d/2) < E(d)`, found by bisection after a
/// log-spaced scan of 1 um to 1 m. `None` when no sign change from "one
/// hop cheaper" to "two hops cheaper" exists in that range.
pub fn energy_crossover(cfg: &SimConfig) -> Option<f64> {
    let gap = |d: f64| -> f64 {
        let one = hop_energy_per_bit(d, cfg).unwrap_or(f64::INFINITY);
        let two = 2.0 * hop_energy_per_bit(d / 2.0, cfg).unwrap_or(f64::INFINITY);
        one - two
    };
    let steps = 600;
    let at = |i: usize| 1e-6 * 1e6f64.powf(i as f64 / steps as f64);
    let mut bracket = None;
    for i in 0..steps {
        if gap(at(i)) <= 0.0 && gap(at(i + 1)) > 0.0 {
            bracket = Some((at(i), at(i + 1)));
        }
    }
    let (mut lo, mut hi) = bracket?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::validate_config;

    fn cfg() -> ValidatedConfig {
        validate_config(SimConfig { trials: 200, ..SimConfig::default() }).unwrap()
    }

    #[test]
    fn unknown_axis_is_rejected() {
        assert!(matches!(sweep(&cfg(), "banana", &[1.0]), Err(EngineError::UnknownAxis(_))));
        assert!(matches!(
            sweep(&cfg(), "links", &[1.5]),
            Err(EngineError::InvalidSweepValue { axis: "links", .. })
        ));
    }

    #[test]
    fn empty_values_give_empty_table() {
        assert!(sweep(&cfg(), "distance", &[]).unwrap().rows.is_empty());
    }

    #[test]
    fn sweep_is_deterministic() {
        let v = [1e-3, 4e-3, 9e-3];
        assert_eq!(sweep(&cfg(), "distance", &v).unwrap(), sweep(&cfg(), "distance", &v).unwrap());
    }

    #[test]
    fn crossover_lies_near_three_mm() {
        let d = energy_crossover(&cfg()).unwrap();
        assert!((1e-3..=6e-3).contains(&d), "{d}");
    }

    #[test]
    fn two_hops_win_beyond_crossover() {
        let c = cfg();
        let d = energy_crossover(&c).unwrap();
        let values: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25e-3).collect();
        for r in sweep(&c, "distance", &values).unwrap().rows {
            if r.value > d * 1.0001 {
                assert!(r.energy_multi_j_per_bit < r.energy_single_j_per_bit, "{}", r.value);
            } else if r.value < d * 0.9999 {
                assert!(r.energy_multi_j_per_bit >= r.energy_single_j_per_bit, "{}", r.value);
            }
        }
    }

    #[test]
    fn more_links_lower_fusion_outage() {
        let rows = sweep(&cfg(), "links", &[1.0, 2.0, 4.0]).unwrap().rows;
        assert!(rows[0].fusion_outage_probability > rows[1].fusion_outage_probability);
        assert!(rows[1].fusion_outage_probability > rows[2].fusion_outage_probability);
        assert!((rows[0].fusion_outage_probability - rows[0].outage_probability).abs() < 1e-9);
    }
}
