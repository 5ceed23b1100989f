//! Earliest-arrival message propagation among moving vehicles and fixed
//! edge servers.
//!
//! Every node moves on a straight line x(t) = x(0) + speed * t (no
//! wrap-around or clipping at the highway ends). A wireless hop costs 0 s
//! and happens at the first instant two nodes are within range; a wired
//! ES-to-ES hop also costs 0 s. All latency therefore comes from waiting
//! for moving nodes to enter range.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::layout::{
    direct_neighbors, place_servers, ConnectionTopology, ServerLayout, SpacingSpec,
};
use crate::scenario::{generate_traffic, TrafficSnapshot, ValidatedParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    /// Position at time 0, meters.
    pub position_m: f64,
    /// Signed constant speed, m/s. ESs have speed exactly 0.
    pub speed_mps: f64,
    pub is_es: bool,
}

impl Node {
    pub fn position_at(&self, t: f64) -> f64 {
        self.position_m + self.speed_mps * t
    }
}

/// Which hops the directional-forwarding rule constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionalMode {
    Off,
    /// A node hands a message to an ES only while moving toward it.
    VehicleToEs,
    /// Time-reversed counterpart used by uplink measurements: an ES-to-
    /// vehicle hop in reversed time is a vehicle-to-ES hop in forward
    /// time, so the receiving vehicle's forward motion (the negation of
    /// its reversed speed) must point toward the ES.
    ReversedEsToVehicle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactRule {
    pub range_m0: f64,
    pub delay_budget_s: f64,
    pub directional: DirectionalMode,
}

impl ContactRule {
    pub fn from_params(params: &ValidatedParams) -> ContactRule {
        ContactRule {
            range_m0: params.range_m0,
            delay_budget_s: params.delay_budget_s,
            directional: if params.directional_forwarding {
                DirectionalMode::VehicleToEs
            } else {
                DirectionalMode::Off
            },
        }
    }
}

/// Earliest t in [t_start, t0] at which `a` can transmit to `b`:
/// |x_a(t) - x_b(t)| <= m0, plus the directional constraint when active.
pub fn earliest_contact(a: &Node, b: &Node, t_start: f64, rule: &ContactRule) -> Result<Option<f64>> {
    let budget = rule.delay_budget_s;
    if t_start < 0.0 || t_start > budget {
        return Err(Error::InvalidWindow {
            start: t_start,
            budget,
        });
    }
    let gap0 = a.position_m - b.position_m;
    let rel_speed = a.speed_mps - b.speed_mps;

    // Window of times where the pair is within range.
    let (lo, hi) = if rel_speed == 0.0 {
        if gap0.abs() <= rule.range_m0 {
            (t_start, budget)
        } else {
            return Ok(None);
        }
    } else {
        let t1 = (-rule.range_m0 - gap0) / rel_speed;
        let t2 = (rule.range_m0 - gap0) / rel_speed;
        let (enter, exit) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let lo = enter.max(t_start);
        let hi = exit.min(budget);
        if lo > hi {
            return Ok(None);
        }
        (lo, hi)
    };

    let constrained = match rule.directional {
        DirectionalMode::Off => None,
        // mover's true velocity, and which endpoint it must approach
        DirectionalMode::VehicleToEs if b.is_es && !a.is_es => Some((a.speed_mps, a, b)),
        DirectionalMode::ReversedEsToVehicle if a.is_es && !b.is_es => {
            Some((-b.speed_mps, b, a))
        }
        _ => None,
    };

    let Some((mover_speed, mover, target)) = constrained else {
        return Ok(Some(lo));
    };

    // toward(t): the mover's (forward-time) velocity points at the target,
    // or the two are co-located.
    let toward = |t: f64| {
        let dx = target.position_at(t) - mover.position_at(t);
        dx == 0.0 || mover_speed * dx > 0.0
    };
    if toward(lo) {
        return Ok(Some(lo));
    }
    // The sign of dx(t) flips at most once, at its root; co-location at
    // the flip counts as toward, so the root is the earliest valid time.
    let dx0 = target.position_m - mover.position_m;
    let dv = target.speed_mps - mover.speed_mps;
    if dv != 0.0 {
        // dx(root) is exactly zero in real arithmetic (co-location, which
        // counts as toward); rounding can leave toward(root) false by a
        // hair, so the root is returned without re-checking it.
        let root = -dx0 / dv;
        if root > lo && root <= hi {
            return Ok(Some(root));
        }
    }
    Ok(None)
}

/// Builds the combined node list: vehicles keep their ids, ESs follow
/// with ids n..n+k, speed 0.
pub fn build_nodes(traffic: &TrafficSnapshot, layout: &ServerLayout) -> Vec<Node> {
    let n = traffic.vehicles.len();
    let mut nodes = Vec::with_capacity(n + layout.count());
    for v in &traffic.vehicles {
        nodes.push(Node {
            id: v.id,
            position_m: v.position_m,
            speed_mps: v.speed_mps,
            is_es: false,
        });
    }
    for (j, &pos) in layout.positions_m().iter().enumerate() {
        nodes.push(Node {
            id: n + j,
            position_m: pos,
            speed_mps: 0.0,
            is_es: true,
        });
    }
    nodes
}

/// Wired adjacency in combined-node indexing (vehicles get empty lists).
pub fn wired_adjacency(
    vehicle_count: usize,
    layout: &ServerLayout,
    topology: &ConnectionTopology,
) -> Result<Vec<Vec<usize>>> {
    let mut adj = vec![Vec::new(); vehicle_count + layout.count()];
    for server in 0..layout.count() {
        let neighbors = direct_neighbors(layout, topology, server)?;
        adj[vehicle_count + server] = neighbors.into_iter().map(|y| vehicle_count + y).collect();
    }
    Ok(adj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    /// Earliest receive time per node id; None = not reached within t0.
    pub receive_time_s: Vec<Option<f64>>,
    /// Node ids sorted by (receive time, id).
    pub order: Vec<usize>,
    /// Witness hop per delivered non-source node: (parent id, contact time).
    pub witness: Vec<Option<(usize, f64)>>,
    /// Largest number of nodes any single settled node could pass the
    /// message to directly (the measured P(t0)).
    pub max_fanout: usize,
}

impl DeliveryReport {
    pub fn delivered(&self, id: usize) -> bool {
        self.receive_time_s[id].is_some()
    }

    pub fn delivered_count(&self) -> usize {
        self.order.len()
    }
}

struct HeapEntry {
    time: f64,
    id: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap, we want least (time, id) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// The set P_i of nodes `sender` can pass the message to, starting at
/// `t_start`: every node with a defined wireless contact, except that at
/// most the two nearest ESs (by distance at `t_start`) receive wirelessly,
/// plus the sender's wired neighbors at `t_start` (zero wired delay).
pub fn reachable_set(
    sender: &Node,
    all: &[Node],
    t_start: f64,
    rule: &ContactRule,
    wired_neighbors: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let mut vehicle_hits = Vec::new();
    let mut es_hits: Vec<(f64, usize, f64)> = Vec::new();
    for node in all {
        if node.id == sender.id {
            continue;
        }
        if let Some(t) = earliest_contact(sender, node, t_start, rule)? {
            if node.is_es {
                let dist = (node.position_at(t_start) - sender.position_at(t_start)).abs();
                es_hits.push((dist, node.id, t));
            } else {
                vehicle_hits.push((node.id, t));
            }
        }
    }
    es_hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    es_hits.truncate(2);

    let mut out = vehicle_hits;
    out.extend(es_hits.into_iter().map(|(_, id, t)| (id, t)));
    for &w in wired_neighbors {
        match out.iter_mut().find(|(id, _)| *id == w) {
            Some(entry) => entry.1 = entry.1.min(t_start),
            None => out.push((w, t_start)),
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Earliest-arrival labeling from the given sources (all at time 0) over
/// an arbitrary node set. `nodes[i].id` must equal `i`; `wired[i]` lists
/// the wired neighbors of node i.
pub fn simulate_nodes(
    nodes: &[Node],
    wired: &[Vec<usize>],
    sources: &[usize],
    rule: &ContactRule,
) -> DeliveryReport {
    let n = nodes.len();
    debug_assert!(nodes.iter().enumerate().all(|(i, node)| node.id == i));
    debug_assert_eq!(wired.len(), n);

    let mut best: Vec<Option<f64>> = vec![None; n];
    let mut witness: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();

    // position-sorted index for pruning candidate scans
    let mut by_pos: Vec<usize> = (0..n).collect();
    by_pos.sort_by(|&a, &b| nodes[a].position_m.total_cmp(&nodes[b].position_m));
    let pos_sorted: Vec<f64> = by_pos.iter().map(|&i| nodes[i].position_m).collect();
    let vmax = nodes.iter().map(|v| v.speed_mps.abs()).fold(0.0, f64::max);

    for &s in sources {
        if best[s].is_none() {
            best[s] = Some(0.0);
            heap.push(HeapEntry { time: 0.0, id: s });
        }
    }

    let mut max_fanout = 0usize;

    while let Some(HeapEntry { time, id }) = heap.pop() {
        if settled[id] {
            continue;
        }
        if best[id] != Some(time) {
            continue; // stale entry
        }
        settled[id] = true;
        order.push(id);
        let sender = &nodes[id];

        // any node contactable from `sender` starts within this radius
        let radius = rule.range_m0 + (sender.speed_mps.abs() + vmax) * rule.delay_budget_s;
        let lo = pos_sorted.partition_point(|&x| x < sender.position_m - radius);
        let hi = pos_sorted.partition_point(|&x| x <= sender.position_m + radius);

        let mut fanout = 0usize;
        let mut es_hits: Vec<(f64, usize, f64)> = Vec::new();
        for &cand in &by_pos[lo..hi] {
            if cand == id {
                continue;
            }
            let target = &nodes[cand];
            let contact = earliest_contact(sender, target, time, rule)
                .expect("settle time is within the delay budget");
            let Some(t) = contact else { continue };
            if target.is_es {
                let dist = (target.position_at(time) - sender.position_at(time)).abs();
                es_hits.push((dist, cand, t));
            } else {
                fanout += 1;
                relax(cand, t, id, &mut best, &mut witness, &settled, &mut heap);
            }
        }
        es_hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        es_hits.truncate(2);
        let capped: Vec<usize> = es_hits.iter().map(|&(_, c, _)| c).collect();
        for (_, cand, t) in es_hits {
            fanout += 1;
            relax(cand, t, id, &mut best, &mut witness, &settled, &mut heap);
        }
        for &w in &wired[id] {
            if !capped.contains(&w) {
                fanout += 1;
            }
            relax(w, time, id, &mut best, &mut witness, &settled, &mut heap);
        }
        max_fanout = max_fanout.max(fanout);
    }

    DeliveryReport {
        receive_time_s: best,
        order,
        witness,
        max_fanout,
    }
}

fn relax(
    target: usize,
    time: f64,
    parent: usize,
    best: &mut [Option<f64>],
    witness: &mut [Option<(usize, f64)>],
    settled: &[bool],
    heap: &mut BinaryHeap<HeapEntry>,
) {
    if settled[target] {
        return;
    }
    let better = match best[target] {
        None => true,
        Some(old) => time < old,
    };
    if better {
        best[target] = Some(time);
        witness[target] = Some((parent, time));
        heap.push(HeapEntry { time, id: target });
    }
}

/// Full simulation of one snapshot: message starts at the snapshot's
/// source vehicle at time 0.
pub fn simulate(
    traffic: &TrafficSnapshot,
    layout: &ServerLayout,
    topology: &ConnectionTopology,
    rule: &ContactRule,
) -> Result<DeliveryReport> {
    let nodes = build_nodes(traffic, layout);
    let wired = wired_adjacency(traffic.vehicles.len(), layout, topology)?;
    let sources: Vec<usize> = traffic.source_id.into_iter().collect();
    Ok(simulate_nodes(&nodes, &wired, &sources, rule))
}

/// The Bernoulli event R_g: one random snapshot at ES spacing `d`
/// succeeds iff at least q * n_D of the vehicles within distance D of
/// the source receive the message within t0.
pub fn event_r(
    spacing_m: f64,
    params: &ValidatedParams,
    topology: &ConnectionTopology,
    seed: u64,
    trial_index: u64,
) -> Result<bool> {
    if spacing_m < params.range_m0 {
        return Err(Error::SpacingBelowRange {
            spacing: spacing_m,
            range: params.range_m0,
        });
    }
    let traffic = generate_traffic(params, seed, trial_index);
    let Some(source) = traffic.source_id else {
        return Ok(true); // no vehicles: q * n_D = 0, vacuously delivered
    };
    let layout = place_servers(params.highway_length_m, SpacingSpec::Spacing(spacing_m))?;
    let rule = ContactRule::from_params(params);
    let report = simulate(&traffic, &layout, topology, &rule)?;

    let src_pos = traffic.vehicles[source].position_m;
    let radius = params.message_radius_m;
    let mut in_window = 0usize;
    let mut delivered = 0usize;
    for v in &traffic.vehicles {
        if (v.position_m - src_pos).abs() <= radius {
            in_window += 1;
            if report.delivered(v.id) {
                delivered += 1;
            }
        }
    }
    Ok(delivered as f64 >= params.target_fraction_q * in_window as f64)
}
