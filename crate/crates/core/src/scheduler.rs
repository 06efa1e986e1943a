//! Layer ordering weight and the nested layer -> cluster -> ADTN TDMA
//! timeline for one transmission cycle.
//!
//! Times are integer picoseconds. Every layer slot is a data part, split
//! among its clusters and then among their ADTNs in proportion to the bits
//! they carry, followed by a forwarding window for the inter-layer phase.
//! Splits use largest-remainder rounding over whole quanta so that children
//! always tile their parent exactly.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::Cluster;
use crate::netmodel::{NodeId, ValidatedConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("cycle time must be positive, got {0} s")]
    NonPositiveCycle(f64),
    #[error("request from node {0} maps to no known cluster")]
    UnknownCluster(NodeId),
}

/// An ADTN's request to send data in the current cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRequest {
    pub ncm_id: NodeId,
    pub nc_id: NodeId,
    /// Distance from the ADTN to the nanocontroller, m.
    pub distance: f64,
    /// Zero-based layer.
    pub layer: u32,
    /// Residual energy when the request was made, J.
    pub residual: f64,
    pub amount_bits: u64,
    pub priority: u32,
    /// Intermediate member when the two-hop intra-cluster path is cheaper.
    pub relay: Option<NodeId>,
}

/// A half-open interval `[start_ps, start_ps + duration_ps)` owned by a
/// layer, cluster or node id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub owner: u32,
    pub start_ps: u64,
    pub duration_ps: u64,
}

impl Slot {
    pub fn end_ps(&self) -> u64 {
        self.start_ps + self.duration_ps
    }

    pub fn contains(&self, other: &Slot) -> bool {
        other.start_ps >= self.start_ps && other.end_ps() <= self.end_ps()
    }

    pub fn contains_time(&self, t: u64) -> bool {
        t >= self.start_ps && t < self.end_ps()
    }
}

/// One ADTN's slot. A relayed ADTN has it split into two equal hop slots
/// (ADTN to relay, relay to head).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdtnSlot {
    pub slot: Slot,
    pub relay: Option<NodeId>,
    pub hops: Vec<Slot>,
}

/// Per-layer forwarding window after the data part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardWindow {
    pub slot: Slot,
    /// Propagation allowance included in the window, ps.
    pub propagation_ps: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timeline {
    pub cycle_ps: u64,
    pub quantum_ps: u64,
    /// Layer slots in transmission order; `owner` is the zero-based layer.
    pub layer_slots: Vec<Slot>,
    /// Keyed by layer; `owner` is the cluster id.
    pub cluster_slots: BTreeMap<u32, Vec<Slot>>,
    /// Keyed by cluster id; `slot.owner` is the ADTN id.
    pub adtn_slots: BTreeMap<u32, Vec<AdtnSlot>>,
    /// Keyed by layer.
    pub forward_windows: BTreeMap<u32, ForwardWindow>,
    /// Keyed by layer.
    pub alpha: BTreeMap<u32, f64>,
    /// Set when there were no requests; all other fields are then empty.
    pub is_empty: bool,
}

/// Ordering weight `L (t + Gamma) / T * sum(M) * P` of one layer, with `L`
/// the one-based layer label.
pub fn layer_weight(
    presentation_layer: u32,
    requests: &[TransmissionRequest],
    bit_time: f64,
    cycle_time: f64,
    propagation: f64,
    priority: u32,
) -> Result<f64, SchedulerError> {
    if !(cycle_time > 0.0) {
        return Err(SchedulerError::NonPositiveCycle(cycle_time));
    }
    let bits: u64 = requests.iter().map(|r| r.amount_bits).sum();
    Ok(presentation_layer as f64 * (bit_time + propagation) / cycle_time
        * bits as f64
        * priority as f64)
}

/// Splits `total` units in proportion to `weights` by largest remainder.
/// Ties in the remainder go to the earlier entry. All-zero weights split
/// evenly.
pub fn proportional_split(total: u64, weights: &[u64]) -> Vec<u64> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    let (weights, sum): (Vec<u128>, u128) = if sum == 0 {
        (vec![1; weights.len()], weights.len() as u128)
    } else {
        (weights.iter().map(|&w| w as u128).collect(), sum)
    };
    let mut shares: Vec<u64> = Vec::with_capacity(weights.len());
    let mut rems: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w;
        shares.push((num / sum) as u64);
        rems.push((num % sum, i));
    }
    let left = total - shares.iter().sum::<u64>();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(left as usize) {
        shares[i] += 1;
    }
    shares
}

fn ceil_to(x: u64, q: u64) -> u64 {
    x.div_ceil(q) * q
}

/// Builds the cycle timeline. Layers without requests get no slot.
pub fn build_timeline(
    requests: &[TransmissionRequest],
    clusters: &[Cluster],
    cfg: &ValidatedConfig,
) -> Result<Timeline, SchedulerError> {
    let q = cfg.slot_quantum_ps;
    if requests.is_empty() {
        return Ok(Timeline { quantum_ps: q, is_empty: true, ..Timeline::default() });
    }
    let owner: HashMap<NodeId, &Cluster> =
        clusters.iter().flat_map(|c| c.members.iter().map(move |&m| (m, c))).collect();

    // layer -> cluster id -> requests, all in deterministic order
    let mut tree: BTreeMap<u32, BTreeMap<u32, Vec<&TransmissionRequest>>> = BTreeMap::new();
    for r in requests {
        let c = owner.get(&r.ncm_id).ok_or(SchedulerError::UnknownCluster(r.ncm_id))?;
        tree.entry(r.layer).or_default().entry(c.id).or_default().push(r);
    }

    let bit_ps = cfg.bit_time_ps();
    let c_ps = cfg.channel.speed_of_light * 1e-12;
    struct LayerPlan {
        layer: u32,
        data_ps: u64,
        propagation_ps: u64,
        window_ps: u64,
    }
    let mut plans = Vec::new();
    for (&layer, by_cluster) in &tree {
        let bits: u64 = by_cluster.values().flatten().map(|r| r.amount_bits).sum();
        let far = by_cluster.values().flatten().map(|r| r.distance).fold(0.0, f64::max);
        let propagation_ps = ceil_to((far / c_ps).ceil() as u64, q);
        // Room for every inter-layer event of every source head: one hop per
        // layer down, the cooperative links, the fusion and the final hop.
        let ops = by_cluster.len() as u64 * (layer as u64 + cfg.coop_links as u64 + 2);
        plans.push(LayerPlan {
            layer,
            data_ps: ceil_to((bits * bit_ps).max(1), q),
            propagation_ps,
            window_ps: propagation_ps + q * ops,
        });
    }
    let cycle_ps: u64 = plans.iter().map(|p| p.data_ps + p.window_ps).sum();

    let mut alpha = BTreeMap::new();
    for p in &plans {
        let reqs: Vec<TransmissionRequest> =
            tree[&p.layer].values().flatten().map(|&r| r.clone()).collect();
        let prio = reqs.iter().map(|r| r.priority).max().unwrap_or(1);
        let a = layer_weight(
            p.layer + 1,
            &reqs,
            cfg.pulse_interval,
            cycle_ps as f64 * 1e-12,
            p.propagation_ps as f64 * 1e-12,
            prio,
        )?;
        alpha.insert(p.layer, a);
    }
    plans.sort_by(|a, b| alpha[&b.layer].total_cmp(&alpha[&a.layer]).then(a.layer.cmp(&b.layer)));

    let mut tl = Timeline { cycle_ps, quantum_ps: q, alpha, ..Timeline::default() };
    let mut t = 0;
    for p in &plans {
        tl.layer_slots.push(Slot { owner: p.layer, start_ps: t, duration_ps: p.data_ps + p.window_ps });
        let by_cluster = &tree[&p.layer];
        let cluster_bits: Vec<u64> =
            by_cluster.values().map(|rs| rs.iter().map(|r| r.amount_bits).sum()).collect();
        let cluster_q = proportional_split(p.data_ps / q, &cluster_bits);
        let mut ct = t;
        let mut cslots = Vec::new();
        for ((&cid, reqs), &nq) in by_cluster.iter().zip(&cluster_q) {
            let cslot = Slot { owner: cid, start_ps: ct, duration_ps: nq * q };
            cslots.push(cslot);
            let mut ordered = reqs.clone();
            ordered.sort_by_key(|r| r.ncm_id);
            let amounts: Vec<u64> = ordered.iter().map(|r| r.amount_bits).collect();
            let mut at = ct;
            let mut aslots = Vec::new();
            for (r, aq) in ordered.iter().zip(proportional_split(nq, &amounts)) {
                let slot = Slot { owner: r.ncm_id, start_ps: at, duration_ps: aq * q };
                let hops = match r.relay {
                    Some(_) => {
                        let first = aq.div_ceil(2) * q;
                        vec![
                            Slot { owner: r.ncm_id, start_ps: at, duration_ps: first },
                            Slot {
                                owner: r.relay.unwrap_or(r.ncm_id),
                                start_ps: at + first,
                                duration_ps: aq * q - first,
                            },
                        ]
                    }
                    None => vec![slot],
                };
                aslots.push(AdtnSlot { slot, relay: r.relay, hops });
                at += aq * q;
            }
            tl.adtn_slots.insert(cid, aslots);
            ct += nq * q;
        }
        tl.cluster_slots.insert(p.layer, cslots);
        tl.forward_windows.insert(
            p.layer,
            ForwardWindow {
                slot: Slot { owner: p.layer, start_ps: t + p.data_ps, duration_ps: p.window_ps },
                propagation_ps: p.propagation_ps,
            },
        );
        t += p.data_ps + p.window_ps;
    }
    Ok(tl)
}
