//! Randomized geometric search for the largest workable ES spacing.
//!
//! The search walks the grid d_i = m0 (1+eps)^(i-1), samples t Bernoulli
//! events per grid point (t chosen from a Chernoff bound so that all grid
//! points together fail with probability at most 2*lambda0), and stops at
//! the first point whose success count drops below (p - delta) t or once
//! the grid leaves [m0, 2D]. The returned spacing is the last grid point
//! that was not rejected: the previous point on a threshold failure (m0
//! when the very first point fails), the final sampled point when the
//! grid runs off the 2D cap.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layout::ConnectionTopology;
use crate::propagation::event_r;
use crate::scenario::ValidatedParams;

/// Least non-negative h with (1+eps)^h * m0 >= 2D.
pub fn compute_h(radius_d: f64, m0: f64, epsilon: f64) -> u32 {
    let target = 2.0 * radius_d;
    let mut h = 0u32;
    let mut reach = m0;
    while reach < target {
        reach *= 1.0 + epsilon;
        h += 1;
    }
    h
}

/// Least non-negative t with h * exp(-t delta^2 / 2) <= lambda0.
pub fn compute_t(h: u32, lambda0: f64, delta: f64) -> Result<u64> {
    if delta <= 0.0 {
        return Err(Error::NonPositiveDelta);
    }
    let h = h as f64;
    if h <= lambda0 {
        return Ok(0);
    }
    let mut t = (2.0 * (h / lambda0).ln() / (delta * delta)).ceil() as u64;
    // guard the ceiling against floating error on either side
    while h * (-(t as f64) * delta * delta / 2.0).exp() > lambda0 {
        t += 1;
    }
    while t > 0 && h * (-((t - 1) as f64) * delta * delta / 2.0).exp() <= lambda0 {
        t -= 1;
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub distance_m: f64,
    pub successes: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ThresholdFail,
    RangeExceeded,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::ThresholdFail => write!(f, "threshold-fail"),
            Termination::RangeExceeded => write!(f, "range-exceeded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    /// Output spacing d: the last grid point that was not rejected.
    pub spacing_m: f64,
    pub grid: Vec<GridPoint>,
    pub h: u32,
    pub t: u64,
    pub delta: f64,
    pub terminated_by: Termination,
}

/// Runs the randomized search. Every event across all grid points gets a
/// fresh trial index, so all samples are independent.
pub fn optimize_spacing(
    params: &ValidatedParams,
    topology: &ConnectionTopology,
    seed: u64,
) -> Result<OptimizerResult> {
    let m0 = params.range_m0;
    let radius_d = params.message_radius_m;
    let epsilon = params.epsilon;
    let p = params.target_prob_p;
    let delta = params.gamma / 3.0;

    let h = compute_h(radius_d, m0, epsilon);
    let t = compute_t(h.max(1), params.lambda0, delta)?;

    let mut grid = Vec::new();
    let mut previous = m0;
    let mut distance = m0;
    let mut next_trial = 0u64;
    let terminated_by;
    loop {
        let successes = sample_grid_point(distance, params, topology, seed, next_trial, t)?;
        next_trial += t;
        grid.push(GridPoint {
            distance_m: distance,
            successes,
            trials: t,
        });
        if (successes as f64) < (p - delta) * t as f64 {
            terminated_by = Termination::ThresholdFail;
            distance = previous;
            break;
        }
        let next_distance = distance * (1.0 + epsilon);
        if next_distance > 2.0 * radius_d {
            terminated_by = Termination::RangeExceeded;
            break;
        }
        previous = distance;
        distance = next_distance;
    }

    Ok(OptimizerResult {
        spacing_m: distance,
        grid,
        h,
        t,
        delta,
        terminated_by,
    })
}

fn sample_grid_point(
    distance: f64,
    params: &ValidatedParams,
    topology: &ConnectionTopology,
    seed: u64,
    first_trial: u64,
    trials: u64,
) -> Result<u64> {
    let outcomes: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|j| event_r(distance, params, topology, seed, first_trial + j))
        .collect();
    Ok(outcomes?.iter().filter(|&&x| x).count() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgEstimate {
    /// Largest grid distance whose empirical success frequency reaches
    /// the requested level; m0 when no point does.
    pub distance_m: f64,
    /// (distance, empirical frequency) for every scanned grid point.
    pub curve: Vec<(f64, f64)>,
    pub no_feasible_point: bool,
}

/// Dense empirical estimate of the threshold distance: scans a geometric
/// grid from m0 to 2D with factor (1 + grid_factor) and many trials per
/// point, and returns the largest point whose success frequency is at
/// least `p_level`.
pub fn brute_force_fg(
    p_level: f64,
    params: &ValidatedParams,
    topology: &ConnectionTopology,
    grid_factor: f64,
    trials_per_point: u64,
    seed: u64,
) -> Result<FgEstimate> {
    let curve = success_curve(params, topology, grid_factor, trials_per_point, seed)?;
    Ok(threshold_from_curve(p_level, params.range_m0, &curve))
}

/// The empirical success-frequency curve over the dense geometric grid.
/// Shared by [`brute_force_fg`] and callers that threshold the same scan
/// at several levels.
pub fn success_curve(
    params: &ValidatedParams,
    topology: &ConnectionTopology,
    grid_factor: f64,
    trials_per_point: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let m0 = params.range_m0;
    let cap = 2.0 * params.message_radius_m;
    let mut distances = Vec::new();
    let mut d = m0;
    while d <= cap {
        distances.push(d);
        d *= 1.0 + grid_factor;
    }
    let mut curve = Vec::with_capacity(distances.len());
    let mut next_trial = 0u64;
    for d in distances {
        let successes =
            sample_grid_point(d, params, topology, seed, next_trial, trials_per_point)?;
        next_trial += trials_per_point;
        curve.push((d, successes as f64 / trials_per_point as f64));
    }
    Ok(curve)
}

/// Largest grid point whose frequency reaches `p_level`.
pub fn threshold_from_curve(p_level: f64, m0: f64, curve: &[(f64, f64)]) -> FgEstimate {
    let passing = curve
        .iter()
        .filter(|&&(_, freq)| freq >= p_level)
        .map(|&(d, _)| d)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a: f64| a.max(d))));
    match passing {
        Some(d) => FgEstimate {
            distance_m: d,
            curve: curve.to_vec(),
            no_feasible_point: false,
        },
        None => FgEstimate {
            distance_m: m0,
            curve: curve.to_vec(),
            no_feasible_point: true,
        },
    }
}
