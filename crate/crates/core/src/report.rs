//! CSV writers for every table the simulator emits.
//!
//! Floats use Rust's shortest round-trip formatting, so a value read back
//! parses to the identical `f64`. No field ever contains a comma; lists
//! inside a field are `;`-separated.

use std::io::{self, Write};

use crate::clustering::Cluster;
use crate::energy::EnergyChain;
use crate::engine::{CycleTrace, MetricsTable};
use crate::mcoutage::McPoint;
use crate::scheduler::Timeline;
use crate::topology::Deployment;

fn row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

/// Shortest representation that parses back to the same value; scientific
/// notation for very small and very large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn header<W: Write>(w: &mut W, names: &[&str]) -> io::Result<()> {
    writeln!(w, "{}", names.join(","))
}

pub fn write_coordinates<W: Write>(w: &mut W, dep: &Deployment) -> io::Result<()> {
    header(w, &["id", "x", "y", "z", "layer"])?;
    for n in dep.sensors() {
        row(w, &[
            n.id.to_string(),
            num(n.pos.x),
            num(n.pos.y),
            num(n.pos.z),
            n.layer.to_string(),
        ])?;
    }
    Ok(())
}

pub fn write_clusters<W: Write>(w: &mut W, clusters: &[Cluster]) -> io::Result<()> {
    header(w, &["cluster_id", "layer", "ncc_id", "member_ids"])?;
    for c in clusters {
        let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
        row(w, &[c.id.to_string(), c.layer.to_string(), c.ncc.to_string(), members.join(";")])?;
    }
    Ok(())
}

/// Rows per slot: `layer`, `cluster`, `adtn`, `hop` (relayed halves) and
/// `forward` (inter-layer window). Times are offset by `base_ps`.
pub fn write_timeline_rows<W: Write>(w: &mut W, tl: &Timeline, base_ps: u64) -> io::Result<()> {
    let mut line = |level: &str, owner: u32, start: u64, dur: u64| {
        row(w, &[level.into(), owner.to_string(), (base_ps + start).to_string(), dur.to_string()])
    };
    for l in &tl.layer_slots {
        line("layer", l.owner, l.start_ps, l.duration_ps)?;
        for c in tl.cluster_slots.get(&l.owner).into_iter().flatten() {
            line("cluster", c.owner, c.start_ps, c.duration_ps)?;
            for a in tl.adtn_slots.get(&c.owner).into_iter().flatten() {
                line("adtn", a.slot.owner, a.slot.start_ps, a.slot.duration_ps)?;
                if a.relay.is_some() {
                    for h in &a.hops {
                        line("hop", h.owner, h.start_ps, h.duration_ps)?;
                    }
                }
            }
        }
        if let Some(f) = tl.forward_windows.get(&l.owner) {
            line("forward", f.slot.owner, f.slot.start_ps, f.slot.duration_ps)?;
        }
    }
    Ok(())
}

pub const TIMELINE_HEADER: [&str; 4] = ["level", "owner_id", "start_ps", "duration_ps"];

pub fn write_timeline<W: Write>(w: &mut W, tl: &Timeline) -> io::Result<()> {
    header(w, &TIMELINE_HEADER)?;
    write_timeline_rows(w, tl, 0)
}

/// Cycle `i` starts at `i * interval_ps` on the absolute clock.
pub fn write_events<W: Write>(w: &mut W, traces: &[CycleTrace], interval_ps: u64) -> io::Result<()> {
    header(w, &["time_ps", "node", "event", "detail"])?;
    for t in traces {
        let base = t.cycle * interval_ps;
        for e in &t.events {
            row(w, &[
                (base + e.time_ps).to_string(),
                e.node.to_string(),
                e.kind.to_string(),
                e.detail.clone(),
            ])?;
        }
    }
    Ok(())
}

pub fn write_timelines<W: Write>(w: &mut W, traces: &[CycleTrace], interval_ps: u64) -> io::Result<()> {
    header(w, &TIMELINE_HEADER)?;
    for t in traces {
        write_timeline_rows(w, &t.timeline, t.cycle * interval_ps)?;
    }
    Ok(())
}

pub const CYCLE_SUMMARY_HEADER: [&str; 11] = [
    "cycle",
    "requests",
    "layers_active",
    "cycle_ps",
    "generated_packets",
    "delivered_packets",
    "delivered_bits",
    "outage_events",
    "dropped_packets",
    "energy_spent_j",
    "energy_harvested_j",
];

pub fn write_cycle_summary<W: Write>(w: &mut W, traces: &[CycleTrace]) -> io::Result<()> {
    header(w, &CYCLE_SUMMARY_HEADER)?;
    for t in traces {
        let spent: crate::netmodel::Energy = t.spent.iter().copied().sum();
        let gained: crate::netmodel::Energy = t.harvested.iter().copied().sum();
        row(w, &[
            t.cycle.to_string(),
            t.requests.len().to_string(),
            t.timeline.layer_slots.len().to_string(),
            t.timeline.cycle_ps.to_string(),
            t.generated_packets.to_string(),
            t.delivered_packets.to_string(),
            t.delivered_bits.to_string(),
            t.outage_events.to_string(),
            t.dropped_packets.to_string(),
            num(spent.joules()),
            num(gained.joules()),
        ])?;
    }
    Ok(())
}

pub fn write_metrics<W: Write>(w: &mut W, table: &MetricsTable) -> io::Result<()> {
    header(w, &MetricsTable::COLUMNS)?;
    for r in &table.rows {
        row(w, &[
            r.axis.clone(),
            num(r.value),
            num(r.distance_m),
            num(r.energy_single_j_per_bit),
            num(r.energy_multi_j_per_bit),
            num(r.p_es),
            num(r.p_es_rate),
            num(r.capacity_single_bps),
            num(r.capacity_multi_bps),
            num(r.outage_capacity_bps),
            num(r.outage_probability),
            num(r.fusion_outage_probability),
            num(r.absorption_per_m),
        ])?;
    }
    Ok(())
}

pub fn write_mc<W: Write>(w: &mut W, points: &[McPoint]) -> io::Result<()> {
    header(w, &["k", "gamma_linear", "gamma_db", "p_mc", "p_analytic", "stderr"])?;
    for p in points {
        row(w, &[
            p.k.to_string(),
            num(p.gamma_linear),
            num(p.gamma_db),
            num(p.p_mc),
            num(p.p_analytic),
            num(p.stderr),
        ])?;
    }
    Ok(())
}

/// `lambda_h` is blank for the top state, `lambda_c` for the bottom one.
pub fn write_chain<W: Write>(w: &mut W, chain: &EnergyChain, pi: &[f64]) -> io::Result<()> {
    header(w, &["u", "E_u", "lambda_h", "lambda_c", "pi_u"])?;
    for u in 0..chain.states() {
        let e = chain.state_energy.get(u).map_or(String::new(), |&e| num(e));
        let h = chain.harvest_rates.get(u).map_or(String::new(), |&r| num(r));
        let c = if u == 0 { String::new() } else { num(chain.consume_rates[u - 1]) };
        row(w, &[u.to_string(), e, h, c, num(pi[u])])?;
    }
    Ok(())
}
