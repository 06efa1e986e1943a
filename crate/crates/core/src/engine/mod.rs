//! Discrete-event execution of transmission cycles: wake-up, intra-cluster
//! transfers with optional relaying, inter-layer decode-and-forward toward
//! the nanocontroller with cooperative fusion, head rotation and harvesting.
//!
//! A cycle runs on virtual picosecond time laid out by the scheduler. Each
//! intra-cluster transmission is placed at the start of its (hop) slot, and
//! inter-layer transmissions at successive quanta of the layer's forwarding
//! window. Slots are sequential, so no two links are ever active at once
//! and the SINR of every link is its SNR.
//!
//! Transmit power on every hop is set so the unshadowed SINR sits
//! `fade_margin_db` above the threshold. A link is in outage when its
//! shadowing draw eats the whole margin.

mod link;
mod sweep;

pub use link::{choose_intra_path, energy_per_bit, hop_energy_per_bit, IntraPath};
pub use sweep::{energy_crossover, sweep, MetricsRow, MetricsTable, SweepAxis};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelError;
use crate::clustering::{apply_clusters, elect_nccs, rotate_ncc, Cluster, ClusterError};
use crate::energy::{cycles_for_energy, e_nps_max, energy_after_cycles, energy_state_index};
use crate::netmodel::{
    derive_seed, Energy, Mode, NodeId, NodeState, Packet, Role, ValidatedConfig, NC_ID,
};
use crate::scheduler::{build_timeline, SchedulerError, Timeline, TransmissionRequest};
use crate::topology::{deploy, Deployment};

const CYCLE_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("unknown sweep axis `{0}` (expected distance, p_out, links or theta)")]
    UnknownAxis(String),
    #[error("value {value} is not valid for sweep axis `{axis}`")]
    InvalidSweepValue { axis: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    WakeUp,
    Harvest,
    TxIntra,
    TxRelay,
    TxInter,
    Fuse,
    Rotate,
    DeadNode,
    Drop,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl EventKind {
    pub fn is_tx(self) -> bool {
        matches!(self, EventKind::TxIntra | EventKind::TxRelay | EventKind::TxInter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time_ps: u64,
    pub node: NodeId,
    pub kind: EventKind,
    pub detail: String,
}

/// Outcome at one fusion node for one batch of forwarded data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionRecord {
    pub time_ps: u64,
    pub fusion_node: NodeId,
    /// Links that actually transmitted into the fusion node.
    pub links: u32,
    pub links_in_outage: u32,
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTrace {
    pub cycle: u64,
    pub timeline: Timeline,
    pub requests: Vec<TransmissionRequest>,
    pub events: Vec<TraceEvent>,
    /// Indexed by node id. Energy before any transmission this cycle.
    pub start_energy: Vec<Energy>,
    /// Indexed by node id. Gain from harvesting just before `start_energy`.
    pub harvested: Vec<Energy>,
    /// Indexed by node id.
    pub spent: Vec<Energy>,
    /// Indexed by node id. Always `start_energy - spent`.
    pub end_energy: Vec<Energy>,
    pub generated_packets: u64,
    pub delivered_packets: u64,
    pub delivered_bits: u64,
    pub outage_events: u64,
    pub dropped_packets: u64,
    pub fusions: Vec<FusionRecord>,
}

impl CycleTrace {
    pub fn tx_events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind.is_tx())
    }
}

/// Mutable simulation state: nodes indexed by id, clusters indexed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub cfg: ValidatedConfig,
    pub nodes: Vec<NodeState>,
    pub clusters: Vec<Cluster>,
    pub cycle: u64,
    next_packet: u64,
}

impl WorldState {
    /// Deploys, registers layers and clusters once.
    pub fn new(cfg: ValidatedConfig) -> Result<Self, EngineError> {
        let dep = deploy(&cfg);
        Self::from_deployment(cfg, dep)
    }

    pub fn from_deployment(cfg: ValidatedConfig, dep: Deployment) -> Result<Self, EngineError> {
        let clusters = elect_nccs(&dep, cfg.low_power_range(), cfg.max_election_rounds)?;
        Ok(Self::from_parts(cfg, dep.nodes, clusters))
    }

    /// Uses hand-built clusters; `clusters[i].id` must equal `i`.
    pub fn from_parts(cfg: ValidatedConfig, mut nodes: Vec<NodeState>, clusters: Vec<Cluster>) -> Self {
        debug_assert!(clusters.iter().enumerate().all(|(i, c)| c.id as usize == i));
        apply_clusters(&mut nodes, &clusters);
        Self { cfg, nodes, clusters, cycle: 0, next_packet: 0 }
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id as usize]
    }

    pub fn energies(&self) -> Vec<Energy> {
        self.nodes.iter().map(|n| n.residual_energy).collect()
    }

    /// Charges every sensor for one message interval along the capacitor
    /// curve. Returns the gain per node.
    pub fn harvest(&mut self) -> Vec<Energy> {
        let p = &self.cfg.energy;
        let e_max = e_nps_max(p);
        let cap = Energy::from_joules(e_max);
        let extra_cycles = self.cfg.message_interval / p.tau;
        self.nodes
            .iter_mut()
            .map(|n| {
                if n.role == Role::Nc || n.residual_energy >= cap {
                    return Energy::ZERO;
                }
                let now = n.residual_energy.joules().min(e_max);
                let Ok(cycles) = cycles_for_energy(now, p) else {
                    return Energy::ZERO;
                };
                let after = Energy::from_joules(energy_after_cycles(cycles + extra_cycles, p))
                    .min(cap)
                    .max(n.residual_energy);
                let gain = after - n.residual_energy;
                n.residual_energy = after;
                gain
            })
            .collect()
    }

    /// Picks this cycle's ADTNs, their data class and their intra-cluster path.
    pub fn generate_requests(&self, rng: &mut impl Rng) -> Result<Vec<TransmissionRequest>, EngineError> {
        let cfg = &self.cfg;
        let classes: Vec<u32> = cfg.priority_table.values().copied().collect();
        let bits = cfg.packet_bits as u64;
        let mut out = Vec::new();
        for c in &self.clusters {
            let ncc = self.node(c.ncc);
            for &m in &c.members {
                if m == c.ncc || !rng.random_bool(cfg.adtn_probability) {
                    continue;
                }
                let priority = classes[rng.random_range(0..classes.len())];
                let adtn = self.node(m);
                let candidates: Vec<NodeState> = c
                    .members
                    .iter()
                    .filter(|&&j| j != m && j != c.ncc)
                    .map(|&j| self.node(j))
                    .filter(|j| {
                        j.pos.distance(&adtn.pos) <= cfg.tx_range
                            && j.pos.distance(&ncc.pos) <= cfg.tx_range
                            && self.can_afford(j, j.pos.distance(&ncc.pos), bits)
                    })
                    .cloned()
                    .collect();
                let relay = match choose_intra_path(adtn, ncc, &candidates, cfg)? {
                    IntraPath::Direct => None,
                    IntraPath::Relay(j) => Some(j),
                };
                out.push(TransmissionRequest {
                    ncm_id: m,
                    nc_id: NC_ID,
                    distance: adtn.pos.distance(&self.node(NC_ID).pos),
                    layer: adtn.layer,
                    residual: adtn.residual_energy.joules(),
                    amount_bits: bits,
                    priority,
                    relay,
                });
            }
        }
        Ok(out)
    }

    fn hop_cost(&self, d: f64, bits: u64) -> Energy {
        let per_bit = hop_energy_per_bit(d.max(f64::MIN_POSITIVE), &self.cfg)
            .expect("distance clamped positive");
        Energy::from_joules(per_bit * bits as f64)
    }

    fn can_afford(&self, n: &NodeState, d: f64, bits: u64) -> bool {
        n.residual_energy >= self.hop_cost(d, bits)
    }

    fn nearest_ncc(&self, layer: u32, to: NodeId) -> Option<NodeId> {
        let at = self.node(to).pos;
        self.clusters
            .iter()
            .filter(|c| c.layer == layer)
            .map(|c| (self.node(c.ncc).pos.distance(&at), c.ncc))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

/// Harvests, draws requests, builds the timeline and runs one cycle.
pub fn step(state: &mut WorldState) -> Result<CycleTrace, EngineError> {
    let harvested = state.harvest();
    let seed = derive_seed(derive_seed(state.cfg.seed, CYCLE_STREAM), state.cycle);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let requests = state.generate_requests(&mut rng)?;
    let timeline = build_timeline(&requests, &state.clusters, &state.cfg)?;
    let mut trace = run_cycle(state, &timeline, &requests, &mut rng)?;
    let harvest_events = harvested.iter().enumerate().filter(|(_, e)| **e > Energy::ZERO).map(
        |(id, e)| TraceEvent {
            time_ps: 0,
            node: id as NodeId,
            kind: EventKind::Harvest,
            detail: format!("gain_aj={}", e.attojoules()),
        },
    );
    trace.events.splice(0..0, harvest_events);
    trace.harvested = harvested;
    Ok(trace)
}

/// Working state of one cycle.
struct Cycle<'a, R: Rng> {
    world: &'a mut WorldState,
    rng: &'a mut R,
    shadowing: Normal<f64>,
    margin_db: f64,
    trace: CycleTrace,
    active: BTreeSet<u32>,
    cluster_of: HashMap<NodeId, u32>,
}

impl<R: Rng> Cycle<'_, R> {
    fn event(&mut self, time_ps: u64, node: NodeId, kind: EventKind, detail: String) {
        self.trace.events.push(TraceEvent { time_ps, node, kind, detail });
    }

    fn in_outage(&mut self) -> bool {
        let xi = self.shadowing.sample(self.rng);
        self.margin_db + xi < 0.0
    }

    /// Spends the energy for `bits` over `from -> to`. Records a dead node
    /// and returns false when the sender cannot afford it.
    fn spend(&mut self, time: u64, from: NodeId, to: NodeId, bits: u64) -> bool {
        let d = self.world.node(from).pos.distance(&self.world.node(to).pos);
        let cost = self.world.hop_cost(d, bits);
        let node = &mut self.world.nodes[from as usize];
        match node.residual_energy.checked_sub(cost) {
            Some(left) => {
                node.residual_energy = left;
                self.trace.spent[from as usize] += cost;
                if let Some(&c) = self.cluster_of.get(&from) {
                    self.active.insert(c);
                }
                true
            }
            None => {
                let have = node.residual_energy.attojoules();
                self.event(
                    time,
                    from,
                    EventKind::DeadNode,
                    format!("to={to} need_aj={} have_aj={have}", cost.attojoules()),
                );
                false
            }
        }
    }

    /// Drops expired packets and ages the rest by one hop.
    fn age(&mut self, time: u64, at: NodeId, packets: &mut Vec<Packet>) {
        let mut kept = Vec::with_capacity(packets.len());
        for mut p in packets.drain(..) {
            if p.ttl == 0 {
                self.trace.dropped_packets += 1;
                self.trace.events.push(TraceEvent {
                    time_ps: time,
                    node: at,
                    kind: EventKind::Drop,
                    detail: format!("packet={} ttl=0", p.id),
                });
            } else {
                p.ttl -= 1;
                kept.push(p);
            }
        }
        *packets = kept;
    }

    /// One shadowed hop. Returns whether the receiver decoded.
    fn link(
        &mut self,
        time: u64,
        from: NodeId,
        to: NodeId,
        kind: EventKind,
        packets: &mut Vec<Packet>,
    ) -> bool {
        self.age(time, from, packets);
        if packets.is_empty() {
            return false;
        }
        let bits = packets.iter().map(|p| p.bits as u64).sum();
        if !self.spend(time, from, to, bits) {
            return false;
        }
        let outage = self.in_outage();
        self.trace.outage_events += outage as u64;
        self.event(time, from, kind, format!("to={to} bits={bits} outage={outage}"));
        !outage
    }

    /// A decode-and-forward hop that is not assessed for outage.
    fn lossless(&mut self, time: u64, from: NodeId, to: NodeId, packets: &mut Vec<Packet>) -> bool {
        self.age(time, from, packets);
        if packets.is_empty() {
            return false;
        }
        let bits = packets.iter().map(|p| p.bits as u64).sum();
        if !self.spend(time, from, to, bits) {
            return false;
        }
        self.event(time, from, EventKind::TxInter, format!("to={to} bits={bits} forward"));
        true
    }

    fn deliver(&mut self, packets: &[Packet]) {
        self.trace.delivered_packets += packets.len() as u64;
        self.trace.delivered_bits += packets.iter().map(|p| p.bits as u64).sum::<u64>();
    }

    fn intra_phase(&mut self, timeline: &Timeline, layer: u32, requests: &HashMap<NodeId, TransmissionRequest>) {
        let Some(cslots) = timeline.cluster_slots.get(&layer) else { return };
        let ttl = self.world.cfg.initial_ttl;
        for cslot in cslots {
            let cid = cslot.owner;
            self.active.insert(cid);
            for aslot in &timeline.adtn_slots[&cid] {
                let adtn = aslot.slot.owner;
                let ncc = self.world.clusters[cid as usize].ncc;
                let bits = requests[&adtn].amount_bits as u32;
                let id = self.world.next_packet;
                self.world.next_packet += 1;
                self.trace.generated_packets += 1;
                let mut batch = vec![Packet { id, origin: adtn, bits, ttl }];
                let ok = match aslot.relay {
                    None => self.link(aslot.hops[0].start_ps, adtn, ncc, EventKind::TxIntra, &mut batch),
                    Some(j) => {
                        self.link(aslot.hops[0].start_ps, adtn, j, EventKind::TxIntra, &mut batch)
                            && self.link(aslot.hops[1].start_ps, j, ncc, EventKind::TxRelay, &mut batch)
                    }
                };
                if ok {
                    self.world.clusters[cid as usize].info_list.extend(batch);
                }
            }
        }
    }

    fn inter_phase(&mut self, timeline: &Timeline, layer: u32) {
        let Some(cslots) = timeline.cluster_slots.get(&layer) else { return };
        let mut tick = timeline.forward_windows[&layer].slot.start_ps;
        let q = timeline.quantum_ps;
        for cslot in cslots {
            let cluster = &mut self.world.clusters[cslot.owner as usize];
            let mut packets = std::mem::take(&mut cluster.info_list);
            // Fusion and aggregation suppress duplicate packet ids.
            packets.sort();
            packets.dedup_by_key(|p| p.id);
            if packets.is_empty() {
                continue;
            }
            let source = cluster.ncc;
            if layer == 0 {
                if self.link(tick, source, NC_ID, EventKind::TxInter, &mut packets) {
                    self.deliver(&packets);
                }
                tick += q;
                continue;
            }
            let mut head = source;
            let mut alive = true;
            for l in (1..layer).rev() {
                let Some(next) = self.world.nearest_ncc(l, head) else { continue };
                alive = self.lossless(tick, head, next, &mut packets);
                tick += q;
                if !alive {
                    break;
                }
                head = next;
            }
            if !alive {
                continue;
            }
            self.fuse_and_deliver(&mut tick, q, head, packets);
        }
    }

    /// Cooperative stage: `head` (layer 1) and up to `coop_links - 1` other
    /// layer-1 heads near the fusion node each send the batch to it; the
    /// fusion node decodes unless every link is in outage, then forwards to
    /// the nanocontroller.
    fn fuse_and_deliver(&mut self, tick: &mut u64, q: u64, head: NodeId, packets: Vec<Packet>) {
        let world = &*self.world;
        let fusion = world.nearest_ncc(0, head).unwrap_or(NC_ID);
        let fpos = world.node(fusion).pos;
        let mut helpers: Vec<(f64, NodeId)> = world
            .clusters
            .iter()
            .filter(|c| c.layer == 1 && c.ncc != head)
            .map(|c| (world.node(c.ncc).pos.distance(&fpos), c.ncc))
            .filter(|&(d, _)| d <= world.cfg.tx_range)
            .collect();
        helpers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let coop = world.cfg.coop_links as usize;
        let senders: Vec<NodeId> =
            std::iter::once(head).chain(helpers.into_iter().map(|(_, id)| id)).take(coop).collect();

        let (mut links, mut outages) = (0u32, 0u32);
        let mut fused: Option<Vec<Packet>> = None;
        for s in senders {
            let mut copy = packets.clone();
            self.age(*tick, s, &mut copy);
            if copy.is_empty() {
                *tick += q;
                continue;
            }
            let bits = copy.iter().map(|p| p.bits as u64).sum();
            if self.spend(*tick, s, fusion, bits) {
                let outage = self.in_outage();
                links += 1;
                outages += outage as u32;
                self.trace.outage_events += outage as u64;
                self.event(*tick, s, EventKind::TxInter, format!("to={fusion} bits={bits} coop outage={outage}"));
                if !outage {
                    fused.get_or_insert_with(Vec::new).extend(copy);
                }
            }
            *tick += q;
        }
        let delivered = links > 0 && outages < links;
        let time = *tick;
        if links >= 2 {
            self.event(time, fusion, EventKind::Fuse, format!("links={links} in_outage={outages} delivered={delivered}"));
            *tick += q;
        }
        self.trace.fusions.push(FusionRecord {
            time_ps: time,
            fusion_node: fusion,
            links,
            links_in_outage: outages,
            delivered,
        });
        let Some(mut batch) = fused else { return };
        batch.sort();
        batch.dedup_by_key(|p| p.id);
        if fusion == NC_ID {
            self.deliver(&batch);
        } else {
            if let Some(&c) = self.cluster_of.get(&fusion) {
                self.active.insert(c);
            }
            if self.link(*tick, fusion, NC_ID, EventKind::TxInter, &mut batch) {
                self.deliver(&batch);
            }
            *tick += q;
        }
    }
}

/// Executes one cycle on `state` following `timeline`, then rotates the
/// head of every cluster that took part and returns all nodes to
/// harvesting.
pub fn run_cycle<R: Rng>(
    state: &mut WorldState,
    timeline: &Timeline,
    requests: &[TransmissionRequest],
    rng: &mut R,
) -> Result<CycleTrace, EngineError> {
    let n = state.nodes.len();
    let shadowing = Normal::new(0.0, state.cfg.channel.shadowing_sigma_db)
        .expect("validated shadowing sigma");
    let cluster_of = state
        .clusters
        .iter()
        .map(|c| (c.ncc, c.id))
        .collect::<HashMap<_, _>>();
    let trace = CycleTrace {
        cycle: state.cycle,
        timeline: timeline.clone(),
        requests: requests.to_vec(),
        events: Vec::new(),
        start_energy: state.energies(),
        harvested: vec![Energy::ZERO; n],
        spent: vec![Energy::ZERO; n],
        end_energy: Vec::new(),
        generated_packets: 0,
        delivered_packets: 0,
        delivered_bits: 0,
        outage_events: 0,
        dropped_packets: 0,
        fusions: Vec::new(),
    };
    let margin_db = state.cfg.fade_margin_db;
    let by_id: HashMap<NodeId, TransmissionRequest> =
        requests.iter().map(|r| (r.ncm_id, r.clone())).collect();
    let mut cx = Cycle {
        world: state,
        rng,
        shadowing,
        margin_db,
        trace,
        active: BTreeSet::new(),
        cluster_of,
    };

    for slot in &timeline.layer_slots {
        let layer = slot.owner;
        cx.event(slot.start_ps, NC_ID, EventKind::WakeUp, format!("layer={layer}"));
        cx.intra_phase(timeline, layer, &by_id);
        cx.inter_phase(timeline, layer);
    }

    let end = timeline.cycle_ps;
    for cid in std::mem::take(&mut cx.active) {
        let old = cx.world.clusters[cid as usize].ncc;
        let next = rotate_ncc(&cx.world.clusters[cid as usize])?;
        let new = next.ncc;
        cx.world.clusters[cid as usize] = next;
        cx.world.nodes[old as usize].role = Role::Ncm;
        cx.world.nodes[new as usize].role = Role::Ncc;
        cx.event(end, new, EventKind::Rotate, format!("cluster={cid} from={old}"));
    }

    let mut trace = cx.trace;
    let p = state.cfg.energy.clone();
    for node in state.nodes.iter_mut().filter(|n| n.role != Role::Nc) {
        node.mode = Mode::Harvesting;
        node.energy_state = energy_state_index(node.residual_energy.joules(), &p);
    }
    trace.end_energy = state.energies();
    state.cycle += 1;
    Ok(trace)
}
