//! Independent reference implementations used only for verification.
//!
//! Nothing here shares code with the production simulator: contact times
//! come from the quadratic formulation of the range condition instead of
//! the linear endpoint solve, every candidate is re-checked against the
//! raw predicate, and delivery labeling settles nodes by full-scan
//! selection instead of a pruned priority queue. The `verify` CLI command and
//! the acceptance suite compare the production paths against these.

use crate::propagation::{ContactRule, DirectionalMode, Node};

const EDGE_SLACK: f64 = 1e-9;

fn within_range(a: &Node, b: &Node, t: f64, rule: &ContactRule) -> bool {
    (a.position_at(t) - b.position_at(t)).abs() <= rule.range_m0 + EDGE_SLACK
}

fn direction_ok(a: &Node, b: &Node, t: f64, rule: &ContactRule) -> bool {
    let (mover_speed, mover, target) = match rule.directional {
        DirectionalMode::Off => return true,
        DirectionalMode::VehicleToEs => {
            if !(b.is_es && !a.is_es) {
                return true;
            }
            (a.speed_mps, a, b)
        }
        DirectionalMode::ReversedEsToVehicle => {
            if !(a.is_es && !b.is_es) {
                return true;
            }
            (-b.speed_mps, b, a)
        }
    };
    let dx = target.position_at(t) - mover.position_at(t);
    dx.abs() <= EDGE_SLACK || mover_speed * dx > -EDGE_SLACK * mover_speed.abs()
}

/// Reference earliest-contact: roots of the quadratic
/// (gap0 + rv t)^2 = m0^2 and the direction-flip instant form the full
/// candidate set; the smallest candidate passing the raw predicate wins.
pub fn reference_contact(a: &Node, b: &Node, t_start: f64, rule: &ContactRule) -> Option<f64> {
    let budget = rule.delay_budget_s;
    assert!((0.0..=budget).contains(&t_start), "window start out of range");

    let mut candidates = vec![t_start];
    let gap0 = a.position_m - b.position_m;
    let rv = a.speed_mps - b.speed_mps;
    // (gap0 + rv t)^2 <= m0^2 boundary
    let qa = rv * rv;
    let qb = 2.0 * gap0 * rv;
    let qc = gap0 * gap0 - rule.range_m0 * rule.range_m0;
    if qa > 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let root = disc.sqrt();
            candidates.push((-qb - root) / (2.0 * qa));
            candidates.push((-qb + root) / (2.0 * qa));
        }
    }
    // direction flip: the mover passes its target
    let pair = match rule.directional {
        DirectionalMode::VehicleToEs if b.is_es && !a.is_es => Some((a, b)),
        DirectionalMode::ReversedEsToVehicle if a.is_es && !b.is_es => Some((b, a)),
        _ => None,
    };
    if let Some((mover, target)) = pair {
        let dv = target.speed_mps - mover.speed_mps;
        if dv != 0.0 {
            candidates.push((mover.position_m - target.position_m) / dv);
        }
    }

    candidates
        .into_iter()
        .filter(|&t| t >= t_start && t <= budget)
        .filter(|&t| within_range(a, b, t, rule) && direction_ok(a, b, t, rule))
        .min_by(f64::total_cmp)
}

/// Reference P_i with identical semantics to the production
/// `reachable_set`: unlimited vehicle fan-out, wireless ES recipients
/// capped at the two nearest (by distance at the send time), wired
/// neighbors at the send time.
pub fn reference_reachable(
    sender: usize,
    nodes: &[Node],
    t_start: f64,
    rule: &ContactRule,
    wired_neighbors: &[usize],
) -> Vec<(usize, f64)> {
    let s = &nodes[sender];
    let mut out = Vec::new();
    let mut es_hits: Vec<(f64, usize, f64)> = Vec::new();
    for (v, node) in nodes.iter().enumerate() {
        if v == sender {
            continue;
        }
        if let Some(t) = reference_contact(s, node, t_start, rule) {
            if node.is_es {
                let dist = (node.position_at(t_start) - s.position_at(t_start)).abs();
                es_hits.push((dist, v, t));
            } else {
                out.push((v, t));
            }
        }
    }
    es_hits.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    es_hits.truncate(2);
    out.extend(es_hits.into_iter().map(|(_, v, t)| (v, t)));
    for &w in wired_neighbors {
        match out.iter_mut().find(|(v, _)| *v == w) {
            Some(entry) => entry.1 = entry.1.min(t_start),
            None => out.push((w, t_start)),
        }
    }
    out
}

/// Selection-based earliest-arrival labeling: repeatedly settles the
/// unsettled node with the smallest tentative time and forwards from it
/// exactly once, at that final time. No heap, no pruning; a full scan
/// picks each settled node.
///
/// Forwarding from intermediate (later-improved) times would be wrong
/// here: the two-nearest-ES cap makes the forwarding set non-monotone in
/// the send time, so a plain relax-until-fixpoint loop can keep
/// deliveries that the final send times never produce.
pub fn reference_simulate(
    nodes: &[Node],
    wired: &[Vec<usize>],
    sources: &[usize],
    rule: &ContactRule,
) -> Vec<Option<f64>> {
    let n = nodes.len();
    let mut times: Vec<Option<f64>> = vec![None; n];
    for &s in sources {
        times[s] = Some(0.0);
    }
    let mut settled = vec![false; n];
    loop {
        let mut pick: Option<(f64, usize)> = None;
        for v in 0..n {
            if settled[v] {
                continue;
            }
            if let Some(t) = times[v] {
                if pick.is_none_or(|(best, _)| t < best) {
                    pick = Some((t, v));
                }
            }
        }
        let Some((tu, u)) = pick else { return times };
        settled[u] = true;
        for (v, tv) in reference_reachable(u, nodes, tu, rule, &wired[u]) {
            if times[v].is_none_or(|old| tv < old) {
                times[v] = Some(tv);
            }
        }
    }
}

/// Closed-form h of the grid-size bound: ceil(ln(2D/m0) / ln(1+eps)).
pub fn reference_h(radius_d: f64, m0: f64, epsilon: f64) -> u32 {
    let x = (2.0 * radius_d / m0).ln() / (1.0 + epsilon).ln();
    x.ceil().max(0.0) as u32
}

/// Closed-form t of the Chernoff sample bound: ceil(2 ln(h/lambda0) / delta^2).
pub fn reference_t(h: u32, lambda0: f64, delta: f64) -> u64 {
    let x = 2.0 * (h as f64 / lambda0).ln() / (delta * delta);
    x.ceil().max(0.0) as u64
}
