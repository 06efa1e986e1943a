//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's numerical code; formulas are re-derived from scratch.

#![allow(dead_code)]

use std::f64::consts::PI;

use nanonet_core::{ChannelParams, SimConfig};

/// Standard normal CDF by composite Simpson integration of the density
/// over `[x - 40, x]` (or its complement for `x > 0`).
pub fn normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    let (a, b) = (x - 40.0, x);
    let n = 200_000;
    let h = (b - a) / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Stationary law of a birth-death chain from detailed balance:
/// `pi[u + 1] / pi[u] = up[u] / down[u]`.
pub fn birth_death_closed_form(up: &[f64], down: &[f64]) -> Vec<f64> {
    let mut w = vec![1.0];
    for u in 0..up.len() {
        let next = w[u] * up[u] / down[u];
        w.push(next);
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Per-hop energy of `bits` over `d`, written out from the link budget:
/// margin * gamma_th * N0 * d^eta * e^(K d) * (4 pi f d / c)^2 / G * T_pulse
/// plus the circuit term.
pub fn hop_energy_j(d: f64, bits: u64, cfg: &SimConfig) -> f64 {
    let ch: &ChannelParams = &cfg.channel;
    let th = 10f64.powf(ch.sinr_threshold_db / 10.0);
    let margin = 10f64.powf(cfg.fade_margin_db / 10.0);
    let k = 4.0 * PI * ch.frequency * d / ch.speed_of_light;
    let radiated = th * ch.noise_power * d.powf(ch.path_loss_exponent) * (ch.absorption * d).exp()
        * k
        * k
        / ch.gain
        * ch.pulse_duration;
    (margin * radiated + cfg.electronics_energy_per_bit) * bits as f64
}

/// Binomial three-sigma half width around `p` for `n` trials.
pub fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Parses `key=value` pairs out of a trace event detail string.
pub fn detail_field<'a>(detail: &'a str, key: &str) -> Option<&'a str> {
    detail.split(' ').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}
