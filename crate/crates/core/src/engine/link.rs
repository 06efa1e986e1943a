//! Per-bit transmit energy and the intra-cluster relay rule.

use serde::{Deserialize, Serialize};

use crate::channel::{spreading_loss, ChannelError};
use crate::netmodel::{ChannelParams, NodeId, NodeState, SimConfig};

/// Least energy per bit for which the unshadowed SINR at distance `d`
/// reaches `gamma_th` against noise `n0`: the required transmit power
/// `gamma_th n0 d^eta e^(K d) (4 pi f d / c)^2 / G` radiated for one pulse.
pub fn energy_per_bit(
    d: f64,
    ch: &ChannelParams,
    n0: f64,
    gamma_th: f64,
) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    let power = gamma_th * n0 * d.powf(ch.path_loss_exponent) * (ch.absorption * d).exp()
        * spreading_loss(d, ch)
        / ch.gain;
    Ok(power * ch.pulse_duration)
}

/// Energy per bit actually spent on one hop: radiated energy with the fade
/// margin applied, plus the distance-independent circuit cost.
pub fn hop_energy_per_bit(d: f64, cfg: &SimConfig) -> Result<f64, ChannelError> {
    let ch = &cfg.channel;
    let radiated = energy_per_bit(d, ch, ch.noise_power, ch.sinr_threshold())?;
    Ok(cfg.fade_margin() * radiated + cfg.electronics_energy_per_bit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntraPath {
    Direct,
    Relay(NodeId),
}

/// Direct when every candidate relay costs more over its two hops than
/// the direct hop; otherwise the relay with the smallest two-hop cost
/// (ties to the lower id).
pub fn choose_intra_path(
    adtn: &NodeState,
    ncc: &NodeState,
    candidates: &[NodeState],
    cfg: &SimConfig,
) -> Result<IntraPath, ChannelError> {
    let direct = hop_energy_per_bit(adtn.pos.distance(&ncc.pos), cfg)?;
    let mut best: Option<(f64, NodeId)> = None;
    for j in candidates {
        let first = adtn.pos.distance(&j.pos);
        let second = j.pos.distance(&ncc.pos);
        if first <= 0.0 || second <= 0.0 {
            continue;
        }
        let sum = hop_energy_per_bit(first, cfg)? + hop_energy_per_bit(second, cfg)?;
        let better = match best {
            None => true,
            Some((c, id)) => sum < c || (sum == c && j.id < id),
        };
        if sum <= direct && better {
            best = Some((sum, j.id));
        }
    }
    Ok(best.map_or(IntraPath::Direct, |(_, id)| IntraPath::Relay(id)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::received_power;
    use crate::netmodel::{Energy, Position};
    use proptest::prelude::*;

    fn node(id: NodeId, x: f64) -> NodeState {
        NodeState::sensor(id, Position::new(x, 0.0, 0.0), Energy::ZERO)
    }

    #[test]
    fn required_power_meets_threshold() {
        // Independent route: radiate E_b / pulse for one pulse and check
        // the received SNR lands on the threshold.
        let ch = ChannelParams { absorption: 20.0, ..ChannelParams::default() };
        let g = ch.sinr_threshold();
        for d in [1e-3, 4.2e-3, 9e-3] {
            let p = energy_per_bit(d, &ch, ch.noise_power, g).unwrap() / ch.pulse_duration;
            let snr = received_power(p, d, 0.0, &ch).unwrap() / ch.noise_power;
            assert!((snr / g - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_distance_costs_thirty_two() {
        let ch = ChannelParams::default();
        let a = energy_per_bit(1e-3, &ch, 1e-9, 10.0).unwrap();
        let b = energy_per_bit(2e-3, &ch, 1e-9, 10.0).unwrap();
        assert!((b / a - 32.0).abs() < 1e-12);
    }

    #[test]
    fn no_candidates_is_direct() {
        let cfg = SimConfig::default();
        assert_eq!(choose_intra_path(&node(1, 0.0), &node(2, 5e-3), &[], &cfg).unwrap(), IntraPath::Direct);
    }

    #[test]
    fn midpoint_relay_wins_at_long_range() {
        let cfg = SimConfig::default();
        let (i, z, j) = (node(1, 0.0), node(2, 8e-3), node(3, 4e-3));
        let direct = hop_energy_per_bit(8e-3, &cfg).unwrap();
        let split = 2.0 * hop_energy_per_bit(4e-3, &cfg).unwrap();
        assert!(split < direct);
        assert_eq!(choose_intra_path(&i, &z, &[j], &cfg).unwrap(), IntraPath::Relay(3));
    }

    #[test]
    fn far_relay_is_ignored() {
        let cfg = SimConfig::default();
        let (i, z, j) = (node(1, 0.0), node(2, 8e-3), node(3, 12e-3));
        assert_eq!(choose_intra_path(&i, &z, &[j], &cfg).unwrap(), IntraPath::Direct);
    }

    #[test]
    fn cheapest_relay_is_chosen() {
        let cfg = SimConfig::default();
        let (i, z) = (node(1, 0.0), node(2, 8e-3));
        let cands = [node(7, 3e-3), node(5, 4e-3), node(6, 5e-3)];
        assert_eq!(choose_intra_path(&i, &z, &cands, &cfg).unwrap(), IntraPath::Relay(5));
    }

    proptest! {
        #[test]
        fn energy_increases_with_distance(a in 1e-5f64..2e-2, b in 1e-5f64..2e-2, k in 0.0f64..50.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let ch = ChannelParams { absorption: k, ..ChannelParams::default() };
            prop_assert!(energy_per_bit(lo, &ch, 1e-9, 10.0).unwrap() < energy_per_bit(hi, &ch, 1e-9, 10.0).unwrap());
        }
    }
}
