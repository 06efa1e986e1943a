//! Harvesting energy model: capacitor charging curve of the nano power
//! source, the birth-death chain over discrete energy states, and the
//! multihop energy-saving probability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::Violation;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("energy {energy} J outside [0, {max}) J")]
    Domain { energy: f64, max: f64 },
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
    #[error("chain is reducible: rate {index} is {rate}")]
    ReducibleChain { index: usize, rate: f64 },
    #[error("stationary system is singular")]
    Singular,
}

/// Nano power source and nanogenerator constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Capacitance, F.
    pub c_nps: f64,
    /// Generator voltage, V.
    pub v_g: f64,
    /// Charge harvested per vibration cycle, C.
    pub delta_q: f64,
    /// Seconds per vibration cycle.
    pub tau: f64,
    pub e_min: f64,
    /// Energy to transmit one packet, J.
    pub e_tx: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self { c_nps: 9e-9, v_g: 0.42, delta_q: 6e-12, tau: 1.0 / 50.0, e_min: 0.0, e_tx: 100e-12 }
    }
}

impl EnergyParams {
    pub fn e_max(&self) -> f64 {
        e_nps_max(self)
    }

    /// Vibration cycles per unit of the charging exponent, `V_g C / dQ`.
    fn cycle_scale(&self) -> f64 {
        self.v_g * self.c_nps / self.delta_q
    }

    pub(crate) fn violations(&self, out: &mut Vec<Violation>) {
        let mut check = |ok: bool, field: &'static str, reason: &str| {
            if !ok {
                out.push(Violation::new(field, reason));
            }
        };
        check(self.c_nps > 0.0 && self.c_nps.is_finite(), "capacitance", "must be > 0");
        check(self.v_g > 0.0 && self.v_g.is_finite(), "generator_voltage", "must be > 0");
        check(self.delta_q > 0.0 && self.delta_q.is_finite(), "charge_per_cycle", "must be > 0");
        check(self.tau > 0.0 && self.tau.is_finite(), "vibration_period", "must be > 0");
        check(self.e_min >= 0.0, "e_min", "must be >= 0");
        check(self.e_tx > 0.0, "e_tx", "must be > 0");
        check(self.e_min + self.e_tx <= self.e_max(), "e_tx", "e_min + e_tx must not exceed E_max");
    }
}

/// Capacitor voltage after `cycles` harvesting cycles from empty.
pub fn v_nps(cycles: u64, p: &EnergyParams) -> f64 {
    v_nps_continuous(cycles as f64, p)
}

fn v_nps_continuous(cycles: f64, p: &EnergyParams) -> f64 {
    -p.v_g * (-cycles / p.cycle_scale()).exp_m1()
}

pub fn e_nps_max(p: &EnergyParams) -> f64 {
    0.5 * p.c_nps * p.v_g * p.v_g
}

/// Stored energy after a (possibly fractional) number of cycles from empty.
pub fn energy_after_cycles(cycles: f64, p: &EnergyParams) -> f64 {
    let v = v_nps_continuous(cycles, p);
    0.5 * p.c_nps * v * v
}

/// Fractional cycles needed to charge from empty to `e`.
pub fn cycles_for_energy(e: f64, p: &EnergyParams) -> Result<f64, EnergyError> {
    let max = e_nps_max(p);
    if !(0.0..max).contains(&e) {
        return Err(EnergyError::Domain { energy: e, max });
    }
    Ok(-p.cycle_scale() * (-(e / max).sqrt()).ln_1p())
}

/// Whole cycles needed to charge from empty to at least `e`.
pub fn cycles_to_energy(e: f64, p: &EnergyParams) -> Result<u64, EnergyError> {
    Ok(cycles_for_energy(e, p)?.ceil() as u64)
}

/// Average power harvested while climbing from `e_now` to `e_now + delta_e`.
///
/// The cycle difference is clamped to at least one so that steps smaller
/// than a single cycle's yield stay finite.
pub fn harvest_rate(e_now: f64, delta_e: f64, p: &EnergyParams) -> Result<f64, EnergyError> {
    if !(delta_e > 0.0) {
        return Err(EnergyError::InvalidParams(format!("delta_e must be > 0, got {delta_e}")));
    }
    let from = cycles_to_energy(e_now, p)?;
    let to = cycles_to_energy(e_now + delta_e, p)?;
    let cycles = to.saturating_sub(from).max(1);
    Ok(delta_e / p.tau / cycles as f64)
}

/// Birth-death chain over energy states `S_0..S_beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyChain {
    pub beta: usize,
    /// `harvest_rates[u]` is the rate `S_u -> S_(u+1)`, for `u < beta`.
    pub harvest_rates: Vec<f64>,
    /// `consume_rates[u - 1]` is the rate `S_u -> S_(u-1)`, for `u >= 1`.
    pub consume_rates: Vec<f64>,
    pub generator: DMatrix<f64>,
    /// Energy of each state, J. Empty for chains built from bare rates.
    pub state_energy: Vec<f64>,
}

impl EnergyChain {
    pub fn from_rates(harvest_rates: Vec<f64>, consume_rates: Vec<f64>) -> Result<Self, EnergyError> {
        if harvest_rates.is_empty() || harvest_rates.len() != consume_rates.len() {
            return Err(EnergyError::InvalidParams(
                "need equal, non-zero numbers of up and down rates".into(),
            ));
        }
        if harvest_rates.iter().chain(&consume_rates).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(EnergyError::InvalidParams("rates must be finite and >= 0".into()));
        }
        let beta = harvest_rates.len();
        let n = beta + 1;
        let mut generator = DMatrix::zeros(n, n);
        for u in 0..beta {
            generator[(u, u + 1)] = harvest_rates[u];
            generator[(u + 1, u)] = consume_rates[u];
        }
        for u in 0..n {
            let off: f64 = (0..n).filter(|&v| v != u).map(|v| generator[(u, v)]).sum();
            generator[(u, u)] = -off;
        }
        Ok(Self { beta, harvest_rates, consume_rates, generator, state_energy: Vec::new() })
    }

    pub fn states(&self) -> usize {
        self.beta + 1
    }
}

/// Chain for a node that harvests per the charging curve and spends
/// `consume_power` watts on average.
pub fn build_chain(p: &EnergyParams, consume_power: f64) -> Result<EnergyChain, EnergyError> {
    if !(p.e_tx > 0.0) {
        return Err(EnergyError::InvalidParams("e_tx must be > 0".into()));
    }
    let span = (e_nps_max(p) - p.e_min) / p.e_tx;
    let beta = span.floor() as usize;
    if beta < 1 {
        return Err(EnergyError::InvalidParams(format!(
            "only {beta} energy states fit above E_min"
        )));
    }
    let state_energy: Vec<f64> = (0..=beta).map(|u| p.e_min + u as f64 * p.e_tx).collect();
    let harvest = state_energy[..beta]
        .iter()
        .map(|&e| harvest_rate(e, p.e_tx, p).map(|r| r / p.e_tx))
        .collect::<Result<Vec<_>, _>>()?;
    let consume = vec![consume_power / p.e_tx; beta];
    let mut chain = EnergyChain::from_rates(harvest, consume)?;
    chain.state_energy = state_energy;
    Ok(chain)
}

/// Solves `pi Q = 0`, `sum(pi) = 1` by LU on the transposed generator with
/// its last equation replaced by the normalisation.
pub fn stationary_distribution(chain: &EnergyChain) -> Result<Vec<f64>, EnergyError> {
    for (index, &rate) in chain.harvest_rates.iter().chain(&chain.consume_rates).enumerate() {
        if !(rate > 0.0) {
            return Err(EnergyError::ReducibleChain { index, rate });
        }
    }
    let n = chain.states();
    let mut a = chain.generator.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(EnergyError::Singular)?;
    Ok(pi.iter().map(|&x| x.max(0.0)).collect())
}

/// Energy state index `u` for a stored energy, clamped to `[0, beta]`.
pub fn energy_state_index(e: f64, p: &EnergyParams) -> u32 {
    let beta = ((e_nps_max(p) - p.e_min) / p.e_tx).floor().max(0.0);
    ((e - p.e_min) / p.e_tx).floor().clamp(0.0, beta) as u32
}

/// Probability that a two-hop route saves energy.
pub fn p_es(e_sr: f64, e_rd: f64, theta: f64) -> f64 {
    -(-theta * (e_sr + e_rd)).exp_m1()
}

/// Derivative of [`p_es`] with respect to the total relay energy.
pub fn p_es_rate(e_sr: f64, e_rd: f64, theta: f64) -> f64 {
    theta * (-theta * (e_sr + e_rd)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> EnergyParams {
        EnergyParams::default()
    }

    #[test]
    fn charging_curve_endpoints() {
        let p = table();
        assert_eq!(v_nps(0, &p), 0.0);
        assert!((v_nps(1_000_000, &p) - 0.42).abs() < 1e-12);
        // 630 ln 2 = 436.68 cycles reach half the generator voltage
        assert!((v_nps_continuous(630.0 * 2f64.ln(), &p) - 0.21).abs() < 1e-12);
    }

    #[test]
    fn maximum_energy() {
        let p = table();
        assert!((e_nps_max(&p) - 793.8e-12).abs() < 1e-21);
        let doubled = EnergyParams { v_g: 0.84, ..p.clone() };
        assert!((e_nps_max(&doubled) / e_nps_max(&p) - 4.0).abs() < 1e-12);
        assert_eq!(e_nps_max(&EnergyParams { c_nps: 0.0, ..p }), 0.0);
    }

    #[test]
    fn cycles_to_energy_points() {
        let p = table();
        assert_eq!(cycles_to_energy(0.0, &p), Ok(0));
        assert_eq!(cycles_to_energy(e_nps_max(&p) / 4.0, &p), Ok(437));
        assert!(matches!(cycles_to_energy(e_nps_max(&p), &p), Err(EnergyError::Domain { .. })));
    }

    #[test]
    fn harvest_rate_shape() {
        let p = table();
        let max = e_nps_max(&p);
        let de = 10e-12;
        let at = |e: f64| harvest_rate(e, de, &p).unwrap();
        // Charging power peaks at a quarter of E_max and falls off above it.
        assert!(at(max / 2.0) > at(0.0));
        assert!(at(max / 4.0) > at(max / 2.0));
        assert!(at(max / 2.0) > at(0.9 * max - de));
        let slow = EnergyParams { tau: 2.0 * p.tau, ..p.clone() };
        assert!((harvest_rate(max / 3.0, de, &slow).unwrap() * 2.0 - at(max / 3.0)).abs() < 1e-24);
    }

    #[test]
    fn chain_for_table_values_has_seven_upper_states() {
        let chain = build_chain(&table(), 1e-9).unwrap();
        assert_eq!(chain.beta, 7);
        assert_eq!(chain.generator.nrows(), 8);
        for u in 0..8 {
            let row = chain.generator.row(u).sum();
            assert!(row.abs() < 1e-12 * chain.generator.amax());
        }
    }

    #[test]
    fn minimal_chain_closed_form() {
        let chain = EnergyChain::from_rates(vec![2.0], vec![3.0]).unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-14 && (pi[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn symmetric_chain_is_uniform() {
        let chain = EnergyChain::from_rates(vec![1.5; 5], vec![1.5; 5]).unwrap();
        for x in stationary_distribution(&chain).unwrap() {
            assert!((x - 1.0 / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rate_is_reducible() {
        let chain = EnergyChain::from_rates(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            stationary_distribution(&chain),
            Err(EnergyError::ReducibleChain { index: 1, rate: 0.0 })
        );
    }

    #[test]
    fn too_few_states_is_invalid() {
        let p = EnergyParams { e_tx: 800e-12, ..table() };
        assert!(matches!(build_chain(&p, 1.0), Err(EnergyError::InvalidParams(_))));
    }

    #[test]
    fn saving_probability_points() {
        assert_eq!(p_es(0.0, 0.0, 5.0), 0.0);
        assert_eq!(p_es(1e300, 0.0, 5.0), 1.0);
        let half = 2f64.ln() / 4.0;
        assert!((p_es(half / 2.0, half / 2.0, 4.0) - 0.5).abs() < 1e-15);
        assert_eq!(p_es_rate(0.0, 0.0, 7.0), 7.0);
    }

    #[test]
    fn state_index_clamps() {
        let p = table();
        assert_eq!(energy_state_index(0.0, &p), 0);
        assert_eq!(energy_state_index(250e-12, &p), 2);
        assert_eq!(energy_state_index(793.8e-12, &p), 7);
    }

    proptest! {
        #[test]
        fn charging_is_monotone_and_bounded(a in 0u64..100_000, b in 0u64..100_000) {
            let p = table();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(v_nps(lo, &p) <= v_nps(hi, &p));
            prop_assert!(v_nps(hi, &p) <= p.v_g);
            prop_assert!(energy_after_cycles(lo as f64, &p) <= energy_after_cycles(hi as f64, &p));
        }

        #[test]
        fn cycles_is_a_left_inverse(frac in 0.0f64..0.999) {
            let p = table();
            let e = frac * e_nps_max(&p);
            let n = cycles_to_energy(e, &p).unwrap();
            prop_assert!(energy_after_cycles(n as f64, &p) >= e * (1.0 - 1e-12));
            if n > 0 {
                prop_assert!(energy_after_cycles((n - 1) as f64, &p) < e);
            }
        }

        #[test]
        fn saving_rate_identity(e1 in 0.0f64..1e-12, e2 in 0.0f64..1e-12, theta in 1e10f64..1e14) {
            let p = p_es(e1, e2, theta);
            prop_assert!((0.0..=1.0).contains(&p));
            let r = p_es_rate(e1, e2, theta);
            prop_assert!((r - theta * (1.0 - p)).abs() <= 1e-12 * theta);
        }
    }
}
