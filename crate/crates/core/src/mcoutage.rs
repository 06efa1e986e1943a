//! Monte Carlo check of fused-link outage against the analytic product form.
//!
//! Each link's SINR in dB is `gamma_db + sigma * xi` with `xi ~ N(0, 1)`.
//! A fusion node fed by `k` links is in outage when every link falls below
//! the decode-and-forward threshold `2^(n R / B) - 1`.
//!
//! With `share_slot` the `k` cooperating transmitters split one TDMA slot,
//! so each must carry `k` times the single-link rate and the threshold
//! rises with `k`. Without it all `k` links face the single-link threshold
//! and the outage is exactly the single-link outage to the power `k`.
//!
//! Trials run in fixed-size batches; batch `i` draws from
//! `ChaCha8(seed ^ i)` and counts are summed, so the result is identical
//! for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::channel::{daf_threshold_db, from_db, fusion_outage, DbNormal};

pub const BATCH_TRIALS: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("link counts must be >= 1")]
    NoLinks,
    #[error("anchor probability must lie in (0, 1), got {0}")]
    BadAnchor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub trials: u64,
    pub k_links: Vec<u32>,
    /// Mean link SINR at each axis point, dB.
    pub gamma_axis_db: Vec<f64>,
    /// Spread of each link's SINR, dB.
    pub sigma_db: f64,
    /// Single-link rate over bandwidth, bit/s/Hz.
    pub spectral_efficiency: f64,
    pub share_slot: bool,
    /// Accuracy goal for analytic evaluation; recorded, not used for matching.
    pub tolerance: f64,
    pub seed: u64,
}

impl McRun {
    /// Setup calibrated so a single link at 10 dB is in outage 12% of the time.
    pub fn calibrated(trials: u64, k_links: Vec<u32>, gamma_axis_db: Vec<f64>, seed: u64) -> Self {
        let sigma_db = CALIBRATED_SIGMA_DB;
        let spectral_efficiency =
            calibrate_rate(ANCHOR_GAMMA_DB, ANCHOR_OUTAGE, sigma_db).expect("anchor in (0, 1)");
        Self {
            trials,
            k_links,
            gamma_axis_db,
            sigma_db,
            spectral_efficiency,
            share_slot: true,
            tolerance: 1e-6,
            seed,
        }
    }

    fn validate(&self) -> Result<(), McError> {
        if self.trials == 0 {
            return Err(McError::NoTrials);
        }
        if self.k_links.is_empty() || self.k_links.contains(&0) {
            return Err(McError::NoLinks);
        }
        Ok(())
    }

    /// Rate multiplier applied to the single-link rate with `k` links.
    fn rate_factor(&self, k: u32) -> u32 {
        if self.share_slot {
            k
        } else {
            1
        }
    }

    fn threshold_db(&self, k: u32) -> f64 {
        daf_threshold_db(self.rate_factor(k), self.spectral_efficiency, 1.0)
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Closed-form outage for `k` identical links at `gamma_db`.
    pub fn analytic(&self, k: u32, gamma_db: f64) -> f64 {
        let links = vec![DbNormal::new(gamma_db, self.sigma_db); k as usize];
        fusion_outage(&links, self.rate_factor(k), self.spectral_efficiency, 1.0)
            .expect("non-empty links, unit bandwidth")
    }
}

/// Mean SINR of the calibration anchor, dB.
pub const ANCHOR_GAMMA_DB: f64 = 10.0;
/// Single-link outage at the anchor.
pub const ANCHOR_OUTAGE: f64 = 0.12;
/// Link SINR spread under which the slot-sharing model puts two and four
/// links near 0.05 and 0.01 at the anchor.
pub const CALIBRATED_SIGMA_DB: f64 = 12.0;

/// Spectral efficiency `R / B` at which one link with mean `gamma_db` and
/// spread `sigma_db` is in outage with probability `p`.
pub fn calibrate_rate(gamma_db: f64, p: f64, sigma_db: f64) -> Result<f64, McError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(McError::BadAnchor(p));
    }
    let z = Normal::standard().inverse_cdf(p);
    let threshold_db = gamma_db + sigma_db * z;
    Ok((1.0 + from_db(threshold_db)).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub k: u32,
    pub gamma_db: f64,
    pub gamma_linear: f64,
    pub p_mc: f64,
    pub p_analytic: f64,
    /// Binomial standard error of `p_mc`.
    pub stderr: f64,
    pub trials: u64,
}

fn batches(trials: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n = trials.div_ceil(BATCH_TRIALS);
    (0..n).into_par_iter().map(move |i| (i, BATCH_TRIALS.min(trials - i * BATCH_TRIALS)))
}

/// Outage counts for every `k` in `ks` from shared draws: each trial
/// samples `max(ks)` links and link set `k` is its first `k` draws.
fn paired_counts(run: &McRun, gamma_db: f64, seed: u64) -> Vec<u64> {
    let kmax = *run.k_links.iter().max().expect("validated") as usize;
    let thresholds: Vec<f64> = run.k_links.iter().map(|&k| run.threshold_db(k)).collect();
    batches(run.trials)
        .map(|(batch, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ batch);
            let mut counts = vec![0u64; run.k_links.len()];
            let mut draws = vec![0.0; kmax];
            for _ in 0..n {
                for d in draws.iter_mut() {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    *d = gamma_db + run.sigma_db * xi;
                }
                for (j, &k) in run.k_links.iter().enumerate() {
                    if draws[..k as usize].iter().all(|&s| s < thresholds[j]) {
                        counts[j] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; run.k_links.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        )
}

fn point(run: &McRun, k: u32, gamma_db: f64, count: u64) -> McPoint {
    let p = count as f64 / run.trials as f64;
    McPoint {
        k,
        gamma_db,
        gamma_linear: from_db(gamma_db),
        p_mc: p,
        p_analytic: run.analytic(k, gamma_db),
        stderr: (p * (1.0 - p) / run.trials as f64).sqrt(),
        trials: run.trials,
    }
}

/// Per-axis-point outage with independent draws for each link count.
/// Rows are ordered by `k` as given, then by axis point.
pub fn mc_outage(run: &McRun) -> Result<Vec<McPoint>, McError> {
    run.validate()?;
    let mut out = Vec::new();
    for (ki, &k) in run.k_links.iter().enumerate() {
        let single = McRun { k_links: vec![k], ..run.clone() };
        for (gi, &g) in run.gamma_axis_db.iter().enumerate() {
            let seed = crate::netmodel::derive_seed(run.seed, ((ki as u64) << 32) | gi as u64);
            let count = paired_counts(&single, g, seed)[0];
            out.push(point(run, k, g, count));
        }
    }
    Ok(out)
}

/// As [`mc_outage`] but every link count reuses the same draws, so the
/// empirical curves are directly comparable trial by trial.
pub fn mc_outage_paired(run: &McRun) -> Result<Vec<McPoint>, McError> {
    run.validate()?;
    let mut by_k: Vec<Vec<McPoint>> = vec![Vec::new(); run.k_links.len()];
    for (gi, &g) in run.gamma_axis_db.iter().enumerate() {
        let seed = crate::netmodel::derive_seed(run.seed, gi as u64);
        for (j, c) in paired_counts(run, g, seed).into_iter().enumerate() {
            by_k[j].push(point(run, run.k_links[j], g, c));
        }
    }
    Ok(by_k.into_iter().flatten().collect())
}

/// Largest `|p_mc - p_analytic|` over the results; 0 for none.
pub fn max_deviation(results: &[McPoint]) -> f64 {
    results.iter().map(|r| (r.p_mc - r.p_analytic).abs()).fold(0.0, f64::max)
}
