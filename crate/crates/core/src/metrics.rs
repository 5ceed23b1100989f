//! Connectivity probabilities, experiment sweeps, and the coverage-only
//! baseline comparison.
//!
//! A vehicle counts as connected when its own message reaches at least
//! one ES within the delay budget (uplink direction). It is *direct*
//! when one wireless hop suffices, *indirect* when at least one vehicle
//! relay is needed; the two classes are disjoint, so their probabilities
//! add up to the total exactly.
//!
//! Classifying every vehicle of a snapshot would naively take one
//! shortest-time run per vehicle. Instead the snapshot is time-reversed
//! (positions advanced to t0, speeds negated): a vehicle can deliver to
//! some ES within [0, t0] exactly when some ES reaches it in the
//! reversed system, so one multi-source run from all ESs classifies the
//! whole snapshot. Wireless contact is symmetric under this reversal;
//! the directional-forwarding rule maps to its reversed counterpart.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layout::{place_servers, ServerLayout, SpacingSpec};
use crate::propagation::{
    earliest_contact, simulate_nodes, ContactRule, DirectionalMode, Node,
};
use crate::scenario::{generate_traffic, TrafficSnapshot, ValidatedParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityBreakdown {
    /// Mean fraction of vehicles with a one-hop ES contact.
    pub direct: f64,
    /// Mean fraction connected only through vehicle relays.
    pub indirect: f64,
    /// direct + indirect, exactly.
    pub total: f64,
    /// Standard error of the per-trial totals.
    pub stderr_total: f64,
    /// Vehicles observed across all trials.
    pub n_vehicles: u64,
    pub n_delivered_direct: u64,
    pub n_delivered_indirect: u64,
}

/// Per-vehicle connectivity flags for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleClassification {
    /// Vehicle can get its message to some ES within t0.
    pub connected: Vec<bool>,
    /// Vehicle has a direct (relay-free) wireless contact with some ES.
    pub direct: Vec<bool>,
}

/// Classifies every vehicle of one snapshot against the given layout.
/// `rule` is the forward-time contact rule.
pub fn classify_vehicles(
    traffic: &TrafficSnapshot,
    layout: &ServerLayout,
    rule: &ContactRule,
) -> VehicleClassification {
    let n = traffic.vehicles.len();
    let k = layout.count();
    let budget = rule.delay_budget_s;

    // Direct: one wireless hop vehicle -> ES, scanned against the sorted
    // ES positions with a conservative reach window.
    let es_positions = layout.positions_m();
    let mut direct = vec![false; n];
    for v in &traffic.vehicles {
        let vehicle = Node {
            id: 0,
            position_m: v.position_m,
            speed_mps: v.speed_mps,
            is_es: false,
        };
        let reach = rule.range_m0 + v.speed_mps.abs() * budget;
        let lo = es_positions.partition_point(|&x| x < v.position_m - reach);
        let hi = es_positions.partition_point(|&x| x <= v.position_m + reach);
        for &es_pos in &es_positions[lo..hi] {
            let server = Node {
                id: 1,
                position_m: es_pos,
                speed_mps: 0.0,
                is_es: true,
            };
            if earliest_contact(&vehicle, &server, 0.0, rule)
                .expect("window start 0 is valid")
                .is_some()
            {
                direct[v.id] = true;
                break;
            }
        }
    }

    // Total: multi-source run over the time-reversed snapshot.
    let mut reversed = Vec::with_capacity(n + k);
    for v in &traffic.vehicles {
        reversed.push(Node {
            id: v.id,
            position_m: v.position_m + v.speed_mps * budget,
            speed_mps: -v.speed_mps,
            is_es: false,
        });
    }
    let mut sources = Vec::with_capacity(k);
    for (j, &pos) in es_positions.iter().enumerate() {
        sources.push(n + j);
        reversed.push(Node {
            id: n + j,
            position_m: pos,
            speed_mps: 0.0,
            is_es: true,
        });
    }
    let reversed_rule = ContactRule {
        range_m0: rule.range_m0,
        delay_budget_s: budget,
        directional: match rule.directional {
            DirectionalMode::Off => DirectionalMode::Off,
            DirectionalMode::VehicleToEs => DirectionalMode::ReversedEsToVehicle,
            DirectionalMode::ReversedEsToVehicle => DirectionalMode::VehicleToEs,
        },
    };
    let wired = vec![Vec::new(); reversed.len()];
    let report = simulate_nodes(&reversed, &wired, &sources, &reversed_rule);
    let connected: Vec<bool> = (0..n).map(|id| report.delivered(id)).collect();

    debug_assert!(
        (0..n).all(|id| !direct[id] || connected[id]),
        "a direct vehicle must be connected"
    );
    VehicleClassification { connected, direct }
}

fn trial_counts(
    params: &ValidatedParams,
    layout: &ServerLayout,
    seed: u64,
    trial: u64,
) -> (usize, usize, usize) {
    let traffic = generate_traffic(params, seed, trial);
    let rule = ContactRule::from_params(params);
    let class = classify_vehicles(&traffic, layout, &rule);
    let n = traffic.vehicles.len();
    let n_direct = class.direct.iter().filter(|&&d| d).count();
    let n_indirect = class
        .connected
        .iter()
        .zip(&class.direct)
        .filter(|&(&c, &d)| c && !d)
        .count();
    (n, n_direct, n_indirect)
}

/// Averages per-trial connectivity fractions over independent snapshots.
pub fn connectivity_breakdown(
    params: &ValidatedParams,
    es_count: usize,
    seed: u64,
    trials: u64,
) -> Result<ConnectivityBreakdown> {
    let layout = place_servers(params.highway_length_m, SpacingSpec::Count(es_count))?;
    let per_trial: Vec<(usize, usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|trial| trial_counts(params, &layout, seed, trial))
        .collect();

    let mut sum_direct = 0.0;
    let mut sum_indirect = 0.0;
    let mut totals = Vec::with_capacity(per_trial.len());
    let mut n_vehicles = 0u64;
    let mut n_direct = 0u64;
    let mut n_indirect = 0u64;
    for &(n, d, i) in &per_trial {
        let (fd, fi) = if n == 0 {
            (0.0, 0.0)
        } else {
            (d as f64 / n as f64, i as f64 / n as f64)
        };
        sum_direct += fd;
        sum_indirect += fi;
        totals.push(fd + fi);
        n_vehicles += n as u64;
        n_direct += d as u64;
        n_indirect += i as u64;
    }
    let t = (trials.max(1)) as f64;
    let direct = sum_direct / t;
    let indirect = sum_indirect / t;
    let mean_total = direct + indirect;
    let stderr_total = if trials > 1 {
        let var = totals
            .iter()
            .map(|x| (x - mean_total) * (x - mean_total))
            .sum::<f64>()
            / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };

    Ok(ConnectivityBreakdown {
        direct,
        indirect,
        total: mean_total,
        stderr_total,
        n_vehicles,
        n_delivered_direct: n_direct,
        n_delivered_indirect: n_indirect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    EsCount(Vec<usize>),
    VehicleCount(Vec<usize>),
    RangeM0(Vec<f64>),
    /// Fixed speed per cell: both speed bounds set to the value.
    Speed(Vec<f64>),
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::EsCount(_) => "es_count",
            SweepAxis::VehicleCount(_) => "vehicle_count",
            SweepAxis::RangeM0(_) => "range_m0",
            SweepAxis::Speed(_) => "speed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub breakdown: ConnectivityBreakdown,
}

/// One connectivity measurement per axis value, with common random
/// numbers (identical seed and trial indices) across cells.
pub fn sweep(
    params: &ValidatedParams,
    es_count: usize,
    axis: &SweepAxis,
    seed: u64,
    trials: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    match axis {
        SweepAxis::EsCount(counts) => {
            for &k in counts {
                let breakdown = connectivity_breakdown(params, k, seed, trials)?;
                rows.push(SweepRow {
                    axis_value: k as f64,
                    breakdown,
                });
            }
        }
        SweepAxis::VehicleCount(counts) => {
            for &n in counts {
                let cell = params.with_vehicle_count(n);
                let breakdown = connectivity_breakdown(&cell, es_count, seed, trials)?;
                rows.push(SweepRow {
                    axis_value: n as f64,
                    breakdown,
                });
            }
        }
        SweepAxis::RangeM0(ranges) => {
            for &m0 in ranges {
                let cell = params.with_range_m0(m0)?;
                let breakdown = connectivity_breakdown(&cell, es_count, seed, trials)?;
                rows.push(SweepRow {
                    axis_value: m0,
                    breakdown,
                });
            }
        }
        SweepAxis::Speed(speeds) => {
            for &v in speeds {
                let cell = params.with_fixed_speed(v)?;
                let breakdown = connectivity_breakdown(&cell, es_count, seed, trials)?;
                rows.push(SweepRow {
                    axis_value: v,
                    breakdown,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub target: f64,
    /// Minimum ES count for the relay-aware scheme.
    pub proposed_count: usize,
    /// Minimum ES count when only direct coverage counts.
    pub baseline_count: usize,
}

/// For each connectivity target, the minimum ES count needed by the
/// relay-aware scheme versus a relay-free direct-coverage baseline.
pub fn baseline_compare(
    params: &ValidatedParams,
    targets: &[f64],
    seed: u64,
    trials: u64,
) -> Result<Vec<CompareRow>> {
    // spacing <= m0/2 puts every highway point within range of an ES
    let max_count = (2.0 * params.highway_length_m / params.range_m0).ceil() as usize + 1;
    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let proposed = min_count_for(params, target, false, max_count, seed, trials)?;
        let baseline = min_count_for(params, target, true, max_count, seed, trials)?;
        rows.push(CompareRow {
            target,
            proposed_count: proposed,
            baseline_count: baseline,
        });
    }
    Ok(rows)
}

fn min_count_for(
    params: &ValidatedParams,
    target: f64,
    direct_only: bool,
    max_count: usize,
    seed: u64,
    trials: u64,
) -> Result<usize> {
    let measure = |k: usize| -> Result<f64> {
        let b = connectivity_breakdown(params, k, seed, trials)?;
        Ok(if direct_only { b.direct } else { b.total })
    };
    if target <= 0.0 {
        return Ok(0);
    }
    if measure(max_count)? < target {
        return Err(Error::UnreachableTarget(target));
    }
    let mut lo = 0usize; // known < target (k = 0 gives 0)
    let mut hi = max_count; // known >= target
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if measure(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
