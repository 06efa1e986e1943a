//! Node deployment and distance-based layer registration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{e_nps_max, energy_state_index};
use crate::netmodel::{
    derive_seed, Energy, NodeId, NodeState, Position, Role, ValidatedConfig, VolumeShape,
};

const DEPLOY_STREAM: u64 = 1;

/// The nanocontroller and every nanosensor. `nodes[i].id == i`, and index 0
/// is the nanocontroller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub nodes: Vec<NodeState>,
    pub nc_position: Position,
    pub rng_seed: u64,
}

impl Deployment {
    /// Nanocontroller plus the given sensors, ids assigned from 1.
    pub fn from_positions(positions: &[Position], residual: &[Energy], rng_seed: u64) -> Self {
        assert_eq!(positions.len(), residual.len());
        let mut nodes = vec![NodeState::nanocontroller(Position::ORIGIN)];
        nodes.extend(
            positions
                .iter()
                .zip(residual)
                .enumerate()
                .map(|(i, (&pos, &e))| NodeState::sensor(i as NodeId + 1, pos, e)),
        );
        Self { nodes, nc_position: Position::ORIGIN, rng_seed }
    }

    pub fn sensors(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.iter().filter(|n| n.role != Role::Nc)
    }

    pub fn sensor_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id as usize]
    }
}

fn sample_position(rng: &mut ChaCha8Rng, radius: f64, shape: VolumeShape) -> Position {
    match shape {
        VolumeShape::Cube => {
            let h = radius / 3f64.sqrt();
            Position::new(
                rng.random_range(-h..=h),
                rng.random_range(-h..=h),
                rng.random_range(-h..=h),
            )
        }
        VolumeShape::Sphere => loop {
            let p = Position::new(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            );
            if p.distance(&Position::ORIGIN) <= 1.0 {
                break Position::new(p.x * radius, p.y * radius, p.z * radius);
            }
        },
    }
}

/// Scatters `node_count` sensors uniformly in the deployment volume with
/// uniformly random initial charge, then registers layers.
pub fn deploy(cfg: &ValidatedConfig) -> Deployment {
    let seed = derive_seed(cfg.seed, DEPLOY_STREAM);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_max = e_nps_max(&cfg.energy);
    let e_cap = Energy::from_joules(e_max);
    let lo = cfg.initial_energy_min_fraction * e_max;
    let mut positions = Vec::with_capacity(cfg.node_count as usize);
    let mut residual = Vec::with_capacity(cfg.node_count as usize);
    for _ in 0..cfg.node_count {
        positions.push(sample_position(&mut rng, cfg.deployment_radius, cfg.volume));
        let e = if lo < e_max { rng.random_range(lo..=e_max) } else { e_max };
        residual.push(Energy::from_joules(e).min(e_cap));
    }
    let mut dep = Deployment::from_positions(&positions, &residual, seed);
    for n in dep.nodes.iter_mut().skip(1) {
        n.energy_state = energy_state_index(n.residual_energy.joules(), &cfg.energy);
    }
    assign_layers(dep, cfg.tx_range)
}

/// `floor(2 d / r)`, snapping ratios within float noise of an integer so
/// that a node exactly on a boundary `m r / 2` lands in layer `m`.
pub fn layer_index(d: f64, r: f64) -> u32 {
    let ratio = 2.0 * d / r;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u32
    } else {
        ratio.floor() as u32
    }
}

/// Inner boundary radius of a layer.
pub fn layer_inner_radius(layer: u32, r: f64) -> f64 {
    layer as f64 * r / 2.0
}

pub fn assign_layers(mut dep: Deployment, r: f64) -> Deployment {
    let nc = dep.nc_position;
    for n in dep.nodes.iter_mut().filter(|n| n.role != Role::Nc) {
        n.layer = layer_index(n.pos.distance(&nc), r);
    }
    dep
}
