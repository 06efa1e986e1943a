//! Cluster-head election by normalised residual energy, cluster membership
//! and round-robin head rotation.
//!
//! Election runs once per simulation. Within each layer, a node whose
//! residual energy is the largest among the still-unassigned nodes in its
//! advertisement range declares itself head (ties go to the lowest id);
//! unassigned nodes that hear a new head join the nearest one. Rounds
//! repeat until every node is placed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{NodeId, NodeState, Packet, Role};
use crate::topology::Deployment;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("E_max must be positive, got {0}")]
    NonPositiveMax(f64),
    #[error("node {node} in layer {layer} found no head within {rounds} election rounds")]
    OrphanNode { node: NodeId, layer: u32, rounds: u32 },
    #[error("cluster {0} has no members")]
    EmptyCluster(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: u32,
    pub layer: u32,
    pub ncc: NodeId,
    /// Rotation order: founding head first, then joiners in registration order.
    pub members: Vec<NodeId>,
    pub formed_at: u64,
    /// Packets the head holds for forwarding; handed over on rotation.
    pub info_list: Vec<Packet>,
}

impl Cluster {
    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }
}

/// Normalised residual energy `E / E_max`.
pub fn weight(node: &NodeState, e_max: f64) -> Result<f64, ClusterError> {
    if !(e_max > 0.0) {
        return Err(ClusterError::NonPositiveMax(e_max));
    }
    Ok(node.residual_energy.joules() / e_max)
}

/// `a` outranks `b` for headship: more residual energy, then lower id.
fn outranks(a: &NodeState, b: &NodeState) -> bool {
    (a.residual_energy, std::cmp::Reverse(a.id)) > (b.residual_energy, std::cmp::Reverse(b.id))
}

/// Elects heads and builds clusters. `max_rounds == 0` means no limit.
///
/// Comparison uses the integer residual energy, which orders nodes exactly
/// as their normalised weights do.
pub fn elect_nccs(
    dep: &Deployment,
    advert_range: f64,
    max_rounds: u32,
) -> Result<Vec<Cluster>, ClusterError> {
    let mut by_layer: BTreeMap<u32, Vec<&NodeState>> = BTreeMap::new();
    for n in dep.sensors() {
        by_layer.entry(n.layer).or_default().push(n);
    }
    let mut clusters = Vec::new();
    for (&layer, nodes) in &by_layer {
        let mut unassigned: Vec<&NodeState> = nodes.clone();
        unassigned.sort_by_key(|n| n.id);
        let mut round = 0u32;
        while !unassigned.is_empty() {
            if max_rounds > 0 && round == max_rounds {
                return Err(ClusterError::OrphanNode {
                    node: unassigned[0].id,
                    layer,
                    rounds: max_rounds,
                });
            }
            let heads: Vec<&NodeState> = unassigned
                .iter()
                .filter(|&&k| {
                    !unassigned.iter().any(|&j| {
                        j.id != k.id && j.pos.distance(&k.pos) <= advert_range && outranks(j, k)
                    })
                })
                .copied()
                .collect();
            let first = clusters.len();
            for h in &heads {
                clusters.push(Cluster {
                    id: clusters.len() as u32,
                    layer,
                    ncc: h.id,
                    members: vec![h.id],
                    formed_at: 0,
                    info_list: Vec::new(),
                });
            }
            let mut rest = Vec::new();
            for &n in &unassigned {
                if heads.iter().any(|h| h.id == n.id) {
                    continue;
                }
                let nearest = heads
                    .iter()
                    .enumerate()
                    .map(|(i, h)| (n.pos.distance(&h.pos), h.id, i))
                    .filter(|&(d, _, _)| d <= advert_range)
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                match nearest {
                    Some((_, _, i)) => clusters[first + i].members.push(n.id),
                    None => rest.push(n),
                }
            }
            unassigned = rest;
            round += 1;
        }
    }
    Ok(clusters)
}

/// Writes roles and cluster ids from `clusters` into the node table.
pub fn apply_clusters(nodes: &mut [NodeState], clusters: &[Cluster]) {
    for c in clusters {
        for &m in &c.members {
            let n = &mut nodes[m as usize];
            n.cluster = Some(c.id);
            n.role = if m == c.ncc { Role::Ncc } else { Role::Ncm };
        }
    }
}

/// Hands headship to the next member in rotation order, carrying the
/// pending information list across.
pub fn rotate_ncc(cluster: &Cluster) -> Result<Cluster, ClusterError> {
    let len = cluster.members.len();
    if len == 0 {
        return Err(ClusterError::EmptyCluster(cluster.id));
    }
    let pos = cluster.members.iter().position(|&m| m == cluster.ncc).unwrap_or(len - 1);
    Ok(Cluster { ncc: cluster.members[(pos + 1) % len], ..cluster.clone() })
}
