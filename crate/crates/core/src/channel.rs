//! Terahertz link physics: received power under spreading, absorption and
//! lognormal shadowing; interference; SINR; Fenton-Wilkinson sums; outage
//! and capacity.
//!
//! All dB quantities are `10 log10` of the linear value and go through
//! [`to_db`] / [`from_db`].

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::netmodel::ChannelParams;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("link distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("component list is empty")]
    NoComponents,
    #[error("standard deviation must be >= 0, got {0} dB")]
    NegativeSigma(f64),
    #[error("bandwidth must be positive, got {0} Hz")]
    NonPositiveBandwidth(f64),
    #[error("invalid absorption table: {0}")]
    InvalidTable(String),
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A Gaussian in the dB domain, i.e. a lognormal in the linear domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbNormal {
    pub mean_db: f64,
    pub std_db: f64,
}

impl DbNormal {
    pub fn new(mean_db: f64, std_db: f64) -> Self {
        Self { mean_db, std_db }
    }
}

/// Received power, interference and SINR statistics of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_rx: f64,
    pub p_interference: f64,
    pub sinr: f64,
    pub sinr_db_mean: f64,
    pub sinr_db_std: f64,
}

/// One interfering transmitter as seen by the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub power: f64,
    pub distance: f64,
    pub shadowing_db: f64,
}

/// Piecewise-linear `K(f)` lookup, clamped outside the tabulated band.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable {
    rows: Vec<[f64; 2]>,
}

impl AbsorptionTable {
    pub fn new(mut rows: Vec<[f64; 2]>) -> Result<Self, ChannelError> {
        if rows.is_empty() {
            return Err(ChannelError::InvalidTable("no rows".into()));
        }
        if rows.iter().any(|r| !r[0].is_finite() || !(r[1] >= 0.0) || !r[1].is_finite()) {
            return Err(ChannelError::InvalidTable("entries must be finite with K >= 0".into()));
        }
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if rows.windows(2).any(|w| w[0][0] == w[1][0]) {
            return Err(ChannelError::InvalidTable("duplicate frequency".into()));
        }
        Ok(Self { rows })
    }

    pub fn lookup(&self, frequency: f64) -> f64 {
        let rows = &self.rows;
        if frequency <= rows[0][0] {
            return rows[0][1];
        }
        let last = rows[rows.len() - 1];
        if frequency >= last[0] {
            return last[1];
        }
        let i = rows.partition_point(|r| r[0] <= frequency);
        let ([f0, k0], [f1, k1]) = (rows[i - 1], rows[i]);
        k0 + (k1 - k0) * (frequency - f0) / (f1 - f0)
    }
}

/// Free-space spreading factor `(4 pi f d / c)^2`.
pub fn spreading_loss(d: f64, ch: &ChannelParams) -> f64 {
    let x = 4.0 * PI * ch.frequency * d / ch.speed_of_light;
    x * x
}

pub fn received_power(
    p_t: f64,
    d: f64,
    xi_db: f64,
    ch: &ChannelParams,
) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    let shadowed = p_t * ch.gain * d.powf(-ch.path_loss_exponent) * from_db(xi_db);
    Ok(shadowed * (-ch.absorption * d).exp() / spreading_loss(d, ch))
}

/// Sum of interferer powers, each evaluated as
/// `P G 10^(xi/10) c^2 e^(-K d) / (16 pi^2 f^2 d^(eta+2))`.
pub fn interference_power(
    interferers: &[Interferer],
    ch: &ChannelParams,
) -> Result<f64, ChannelError> {
    let scale = ch.speed_of_light * ch.speed_of_light
        / (16.0 * PI * PI * ch.frequency * ch.frequency);
    interferers.iter().try_fold(0.0, |acc, i| {
        if !(i.distance > 0.0) {
            return Err(ChannelError::NonPositiveDistance(i.distance));
        }
        let term = i.power * ch.gain * from_db(i.shadowing_db) * scale
            * (-ch.absorption * i.distance).exp()
            / i.distance.powf(ch.path_loss_exponent + 2.0);
        Ok(acc + term)
    })
}

pub fn sinr(p_rx: f64, p_i: f64, n0: f64) -> f64 {
    p_rx / (p_i + n0)
}

/// Deterministic link budget (no shadowing draw) with the SINR spread
/// obtained by moment-matching the shadowed interference-plus-noise.
pub fn link_budget(
    p_t: f64,
    d: f64,
    interferers: &[Interferer],
    ch: &ChannelParams,
) -> Result<LinkBudget, ChannelError> {
    let p_rx = received_power(p_t, d, 0.0, ch)?;
    let p_interference = interference_power(interferers, ch)?;
    let sigma = ch.shadowing_sigma_db;
    let mut components = vec![DbNormal::new(to_db(ch.noise_power), 0.0)];
    for i in interferers {
        let mean = received_power(i.power, i.distance, 0.0, ch)?;
        components.push(DbNormal::new(to_db(mean), sigma));
    }
    let denom = lognormal_fit(&components)?;
    Ok(LinkBudget {
        p_rx,
        p_interference,
        sinr: sinr(p_rx, p_interference, ch.noise_power),
        sinr_db_mean: to_db(p_rx) - denom.mean_db,
        sinr_db_std: (sigma * sigma + denom.std_db * denom.std_db).sqrt(),
    })
}

/// Fenton-Wilkinson: approximates a sum of independent lognormals by one
/// lognormal with the same linear-domain mean and variance.
pub fn lognormal_fit(components: &[DbNormal]) -> Result<DbNormal, ChannelError> {
    match components {
        [] => return Err(ChannelError::NoComponents),
        [only] if only.std_db >= 0.0 => return Ok(*only),
        _ => {}
    }
    let lambda = LN_10 / 10.0;
    let (mut mean, mut var) = (0.0, 0.0);
    for c in components {
        if !(c.std_db >= 0.0) {
            return Err(ChannelError::NegativeSigma(c.std_db));
        }
        let (mu, s2) = (lambda * c.mean_db, (lambda * c.std_db).powi(2));
        let m = (mu + s2 / 2.0).exp();
        mean += m;
        var += m * m * s2.exp_m1();
    }
    let s2_ln = (var / (mean * mean)).ln_1p();
    let mu_ln = mean.ln() - s2_ln / 2.0;
    Ok(DbNormal::new(mu_ln / lambda, s2_ln.sqrt() / lambda))
}

fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// `P(gamma < threshold)` for a SINR that is Gaussian in dB.
pub fn outage_single(threshold_db: f64, phi_db: f64, sigma_db: f64) -> f64 {
    if sigma_db <= 0.0 {
        return if phi_db < threshold_db { 1.0 } else { 0.0 };
    }
    std_normal_cdf((threshold_db - phi_db) / sigma_db)
}

/// Decode-and-forward SINR threshold `2^(n C / B) - 1` in dB, or `None`
/// when `n C / B <= 0` (no rate requirement).
pub fn daf_threshold_db(n_layers: u32, rate: f64, bandwidth: f64) -> Option<f64> {
    let x = n_layers as f64 * rate / bandwidth;
    (x > 0.0).then(|| to_db((x * std::f64::consts::LN_2).exp_m1()))
}

/// Outage of a fusion node that fails only when every incoming link fails.
pub fn fusion_outage(
    links: &[DbNormal],
    n_layers: u32,
    rate: f64,
    bandwidth: f64,
) -> Result<f64, ChannelError> {
    if links.is_empty() {
        return Err(ChannelError::NoComponents);
    }
    if !(bandwidth > 0.0) {
        return Err(ChannelError::NonPositiveBandwidth(bandwidth));
    }
    let Some(threshold) = daf_threshold_db(n_layers, rate, bandwidth) else {
        return Ok(0.0);
    };
    Ok(links.iter().map(|l| outage_single(threshold, l.mean_db, l.std_db)).product())
}

/// Shannon capacity summed over `(bandwidth, sinr)` subchannels, bit/s.
pub fn capacity(subchannels: &[(f64, f64)]) -> f64 {
    subchannels.iter().map(|&(b, g)| b * (1.0 + g).log2()).sum()
}

pub fn outage_capacity(bandwidth: f64, gamma: f64, p_out: f64) -> f64 {
    bandwidth * (1.0 + gamma).log2() * (1.0 - p_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bare() -> ChannelParams {
        ChannelParams { gain: 1.0, path_loss_exponent: 0.0, ..ChannelParams::default() }
    }

    #[test]
    fn spreading_factor_at_one_terahertz_ten_mm() {
        let ch = ChannelParams { speed_of_light: 3e8, ..bare() };
        let hand = {
            let x: f64 = 4.0 * 3.141592653589793 * 1e12 * 0.01 / 3e8;
            1.0 / (x * x)
        };
        let p = received_power(1.0, 0.01, 0.0, &ch).unwrap();
        assert!((p - hand).abs() / hand < 1e-12);
        assert!((p - 5.70e-6).abs() < 0.01e-6);
    }

    #[test]
    fn shadowing_gain_is_decibel() {
        let ch = ChannelParams::default();
        let a = received_power(1.0, 3e-3, 0.0, &ch).unwrap();
        let b = received_power(1.0, 3e-3, 10.0, &ch).unwrap();
        assert!((b / a - 10.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_distance_costs_five_octaves() {
        let ch = ChannelParams::default();
        let a = received_power(1.0, 2e-3, 0.0, &ch).unwrap();
        let b = received_power(1.0, 4e-3, 0.0, &ch).unwrap();
        assert!((b / a - 1.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_distance_is_rejected() {
        let ch = ChannelParams::default();
        assert_eq!(received_power(1.0, 0.0, 0.0, &ch), Err(ChannelError::NonPositiveDistance(0.0)));
    }

    #[test]
    fn interference_terms() {
        let ch = ChannelParams { absorption: 3.0, ..ChannelParams::default() };
        assert_eq!(interference_power(&[], &ch).unwrap(), 0.0);
        let i = Interferer { power: 2e-3, distance: 4e-3, shadowing_db: 1.5 };
        let one = interference_power(&[i], &ch).unwrap();
        let direct = received_power(2e-3, 4e-3, 1.5, &ch).unwrap();
        assert!((one - direct).abs() / direct < 1e-12);
        let two = interference_power(&[i, i], &ch).unwrap();
        assert!((two - 2.0 * one).abs() / one < 1e-14);
    }

    #[test]
    fn sinr_cases() {
        assert_eq!(sinr(4.0, 0.0, 2.0), 2.0);
        assert_eq!(sinr(0.0, 1.0, 2.0), 0.0);
        assert_eq!(sinr(1.0, 1.0, 1.0), 0.5);
    }

    #[test]
    fn fit_of_single_and_deterministic_components() {
        let c = DbNormal::new(3.0, 2.0);
        assert_eq!(lognormal_fit(&[c]).unwrap(), c);
        let d = DbNormal::new(-4.0, 0.0);
        let fit = lognormal_fit(&[d, d]).unwrap();
        assert!((fit.mean_db - (-4.0 + to_db(2.0))).abs() < 1e-12);
        assert!(fit.std_db.abs() < 1e-6);
        assert_eq!(lognormal_fit(&[]), Err(ChannelError::NoComponents));
    }

    #[test]
    fn outage_reference_points() {
        assert_eq!(outage_single(12.0, 12.0, 4.0), 0.5);
        assert!(outage_single(12.0, 1e6, 4.0) < 1e-300);
        // Phi(-1) from a standard normal table; statrs is good to ~1e-10
        assert!((outage_single(12.0, 16.0, 4.0) - 0.158_655_253_931_457).abs() < 1e-10);
        assert_eq!(outage_single(12.0, 11.0, 0.0), 1.0);
        assert_eq!(outage_single(12.0, 13.0, 0.0), 0.0);
    }

    #[test]
    fn fusion_reduces_to_single_link() {
        let link = DbNormal::new(5.0, 6.0);
        let th = daf_threshold_db(2, 0.5e12, 1e12).unwrap();
        let p = fusion_outage(&[link], 2, 0.5e12, 1e12).unwrap();
        assert_eq!(p, outage_single(th, 5.0, 6.0));
        assert_eq!(fusion_outage(&[link], 0, 1e12, 1e12).unwrap(), 0.0);
        // 2^1 - 1 = 1 -> 0 dB
        assert!(daf_threshold_db(1, 1.0, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn capacity_reference_points() {
        assert_eq!(capacity(&[(1e12, 0.0), (5.0, 0.0)]), 0.0);
        assert_eq!(capacity(&[(1.0, 1.0)]), 1.0);
        assert_eq!(capacity(&[(1.0, 3.0)]), 2.0);
        assert_eq!(outage_capacity(7.0, 3.0, 0.0), capacity(&[(7.0, 3.0)]));
        assert_eq!(outage_capacity(7.0, 3.0, 1.0), 0.0);
    }

    #[test]
    fn absorption_table_interpolates_and_clamps() {
        let t = AbsorptionTable::new(vec![[2e12, 30.0], [1e12, 10.0]]).unwrap();
        assert_eq!(t.lookup(0.5e12), 10.0);
        assert_eq!(t.lookup(3e12), 30.0);
        assert!((t.lookup(1.25e12) - 15.0).abs() < 1e-12);
        assert!(AbsorptionTable::new(vec![]).is_err());
        assert!(AbsorptionTable::new(vec![[1.0, -1.0]]).is_err());
    }

    #[test]
    fn budget_without_interference_uses_noise_only() {
        let ch = ChannelParams::default();
        let b = link_budget(1e-2, 5e-3, &[], &ch).unwrap();
        assert_eq!(b.p_interference, 0.0);
        assert!((b.sinr_db_mean - to_db(b.sinr)).abs() < 1e-9);
        assert_eq!(b.sinr_db_std, ch.shadowing_sigma_db);
    }

    proptest! {
        #[test]
        fn outage_monotone_in_mean(th in -20.0f64..30.0, a in -40.0f64..40.0, b in -40.0f64..40.0, s in 0.1f64..15.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(outage_single(th, hi, s) <= outage_single(th, lo, s));
        }

        #[test]
        fn received_power_decreases_with_distance_and_absorption(
            d1 in 1e-4f64..2e-2, d2 in 1e-4f64..2e-2, k1 in 0.0f64..100.0, k2 in 0.0f64..100.0,
        ) {
            let (dn, df) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let (kl, kh) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let ch = ChannelParams { absorption: kl, ..ChannelParams::default() };
            prop_assert!(received_power(1.0, df, 0.0, &ch).unwrap() <= received_power(1.0, dn, 0.0, &ch).unwrap());
            let chh = ChannelParams { absorption: kh, ..ChannelParams::default() };
            prop_assert!(received_power(1.0, dn, 0.0, &chh).unwrap() <= received_power(1.0, dn, 0.0, &ch).unwrap());
        }

        #[test]
        fn fusion_never_exceeds_best_link(
            links in proptest::collection::vec((-10.0f64..20.0, 0.0f64..10.0), 1..6),
            x in 0.01f64..4.0,
        ) {
            let links: Vec<_> = links.into_iter().map(|(m, s)| DbNormal::new(m, s)).collect();
            let th = daf_threshold_db(1, x, 1.0).unwrap();
            let p = fusion_outage(&links, 1, x, 1.0).unwrap();
            let best = links.iter().map(|l| outage_single(th, l.mean_db, l.std_db)).fold(1.0, f64::min);
            prop_assert!(p <= best);
        }
    }
}
