//! Random small instances for verification runs and oracle tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::propagation::{ContactRule, DirectionalMode, Node};

/// A random mixed vehicle/ES instance with wired ES adjacency and one
/// source node.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub nodes: Vec<Node>,
    pub wired: Vec<Vec<usize>>,
    pub source: usize,
    pub rule: ContactRule,
}

/// Deterministic in `seed`. Mixes both topologies, random label arrays,
/// and both states of the directional-forwarding rule.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vehicles = rng.random_range(1..=40usize);
    let n_es = rng.random_range(0..=10usize);
    let span = 20_000.0;

    let mut nodes = Vec::with_capacity(n_vehicles + n_es);
    for id in 0..n_vehicles {
        let speed = rng.random_range(0.0..35.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        nodes.push(Node {
            id,
            position_m: rng.random_range(0.0..span),
            speed_mps: speed,
            is_es: false,
        });
    }
    let mut es_list: Vec<(usize, f64)> = Vec::with_capacity(n_es);
    for j in 0..n_es {
        let id = n_vehicles + j;
        let pos = rng.random_range(0.0..span);
        nodes.push(Node {
            id,
            position_m: pos,
            speed_mps: 0.0,
            is_es: true,
        });
        es_list.push((id, pos));
    }

    // labels: 0 = all one wire, 1 = all isolated, 2 = random small labels
    let labels: Vec<u64> = match rng.random_range(0..3u8) {
        0 => vec![1; n_es],
        1 => (0..n_es as u64).collect(),
        _ => (0..n_es).map(|_| rng.random_range(0..3u64)).collect(),
    };
    let wired = wire_by_labels(&es_list, &labels, nodes.len());

    let rule = ContactRule {
        range_m0: rng.random_range(50.0..400.0),
        delay_budget_s: rng.random_range(5.0..60.0),
        directional: if rng.random::<bool>() {
            DirectionalMode::VehicleToEs
        } else {
            DirectionalMode::Off
        },
    };
    let source = rng.random_range(0..nodes.len());
    RandomInstance {
        nodes,
        wired,
        source,
        rule,
    }
}

/// Direct-connection wiring over arbitrary ES positions: nearest
/// same-label ES on each side, nothing same-labeled in between.
pub fn wire_by_labels(
    es_list: &[(usize, f64)],
    labels: &[u64],
    node_count: usize,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..es_list.len()).collect();
    order.sort_by(|&a, &b| es_list[a].1.total_cmp(&es_list[b].1));
    let mut wired = vec![Vec::new(); node_count];
    for (rank, &j) in order.iter().enumerate() {
        let mut neighbors = Vec::new();
        if let Some(&left) = order[..rank].iter().rev().find(|&&x| labels[x] == labels[j]) {
            neighbors.push(es_list[left].0);
        }
        if let Some(&right) = order[rank + 1..].iter().find(|&&x| labels[x] == labels[j]) {
            neighbors.push(es_list[right].0);
        }
        neighbors.sort_unstable();
        wired[es_list[j].0] = neighbors;
    }
    wired
}
