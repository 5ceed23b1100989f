//! Highway parameter set and deterministic traffic generation.
//!
//! A scenario describes a one-dimensional highway of length `L` with `n`
//! vehicles placed at random positions, each moving at a constant speed
//! drawn from `[v1, v2]`. Regenerating a snapshot with the same
//! `(params, seed, trial_index)` is bit-for-bit reproducible; different
//! trial indices use independent RNG streams so trials can run in
//! parallel without shared state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, ParamViolation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    OneWay,
    TwoWay,
}

/// How vehicle positions are drawn. Uniform i.i.d. is the default;
/// Poisson places a Poisson point process with the same mean count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Uniform,
    Poisson,
}

/// Exactly one of the two population descriptions is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    Count(usize),
    DensityPerKm(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Highway length L in meters.
    pub highway_length_m: f64,
    /// Wireless transmission range m0 shared by vehicles and ESs, meters.
    pub range_m0: f64,
    /// Lower bound v1 of the speed magnitude range, m/s.
    pub speed_min_mps: f64,
    /// Upper bound v2 of the speed magnitude range, m/s.
    pub speed_max_mps: f64,
    /// Number of vehicles, or average density per kilometer.
    pub population: Population,
    /// Delay budget t0 in seconds.
    pub delay_budget_s: f64,
    /// Radius D around the source inside which delivery is measured, meters.
    pub message_radius_m: f64,
    /// Required fraction q of vehicles within D that must receive the message.
    pub target_fraction_q: f64,
    /// Required success probability p.
    pub target_prob_p: f64,
    /// Probability slack gamma of the randomized search.
    pub gamma: f64,
    /// Geometric grid precision epsilon.
    pub epsilon: f64,
    /// Per-grid-point failure budget lambda0.
    pub lambda0: f64,
    pub direction_mode: DirectionMode,
    /// When set, a vehicle hands a message to an ES only while moving
    /// toward it.
    pub directional_forwarding: bool,
    pub placement: Placement,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            highway_length_m: 100_000.0,
            range_m0: 200.0,
            speed_min_mps: 20.0,
            speed_max_mps: 30.0,
            population: Population::Count(1060),
            delay_budget_s: 60.0,
            message_radius_m: 20_000.0,
            target_fraction_q: 0.9,
            target_prob_p: 0.9,
            gamma: 0.3,
            epsilon: 0.1,
            lambda0: 0.1,
            direction_mode: DirectionMode::TwoWay,
            directional_forwarding: false,
            placement: Placement::Uniform,
        }
    }
}

/// Scenario parameters that passed [`validate_params`]. The vehicle count
/// is resolved (rounded from density when density was given).
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    params: ScenarioParams,
    vehicle_count: usize,
}

impl ValidatedParams {
    pub fn vehicle_count(&self) -> usize {
        self.vehicle_count
    }

    /// Copy with a different vehicle count (used by sweeps).
    pub fn with_vehicle_count(&self, count: usize) -> ValidatedParams {
        let mut params = self.params.clone();
        params.population = Population::Count(count);
        ValidatedParams {
            params,
            vehicle_count: count,
        }
    }

    /// Copy with a different transmission range (used by sweeps).
    pub fn with_range_m0(&self, range_m0: f64) -> Result<ValidatedParams> {
        let mut params = self.params.clone();
        params.range_m0 = range_m0;
        validate_params(params)
    }

    /// Copy with a fixed speed (both bounds set to `speed`).
    pub fn with_fixed_speed(&self, speed: f64) -> Result<ValidatedParams> {
        let mut params = self.params.clone();
        params.speed_min_mps = speed;
        params.speed_max_mps = speed;
        validate_params(params)
    }

    /// Copy with a different highway length (used by calibration).
    pub fn with_highway_length(&self, length_m: f64) -> Result<ValidatedParams> {
        let mut params = self.params.clone();
        params.highway_length_m = length_m;
        validate_params(params)
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = ScenarioParams;

    fn deref(&self) -> &ScenarioParams {
        &self.params
    }
}

/// Checks every scenario constraint and resolves the vehicle count.
/// All violations are reported at once.
pub fn validate_params(raw: ScenarioParams) -> Result<ValidatedParams> {
    let mut violations = Vec::new();

    if !(raw.highway_length_m > 0.0) {
        violations.push(ParamViolation::NegativeLength("highway_length_m"));
    }
    if !(raw.range_m0 > 0.0) {
        violations.push(ParamViolation::NegativeLength("range_m0"));
    }
    if !(raw.delay_budget_s > 0.0) {
        violations.push(ParamViolation::NegativeLength("delay_budget_s"));
    }
    if !(raw.message_radius_m > 0.0) {
        violations.push(ParamViolation::NegativeLength("message_radius_m"));
    }
    if raw.speed_min_mps > raw.speed_max_mps {
        violations.push(ParamViolation::EmptySpeedRange {
            min: raw.speed_min_mps,
            max: raw.speed_max_mps,
        });
    }
    if raw.speed_min_mps < 0.0 {
        violations.push(ParamViolation::NegativeSpeed(raw.speed_min_mps));
    }
    for (field, value) in [
        ("target_fraction_q", raw.target_fraction_q),
        ("target_prob_p", raw.target_prob_p),
    ] {
        if !(0.0..=1.0).contains(&value) {
            violations.push(ParamViolation::BadProbability { field, value });
        }
    }
    if raw.gamma <= 0.0
        || raw.gamma >= raw.target_prob_p
        || raw.target_prob_p - raw.gamma / 3.0 <= 0.0
    {
        violations.push(ParamViolation::DegenerateProbability {
            p: raw.target_prob_p,
            gamma: raw.gamma,
        });
    }
    if !(raw.epsilon > 0.0 && raw.epsilon < 1.0) {
        violations.push(ParamViolation::ZeroEpsilon(raw.epsilon));
    }
    if !(raw.lambda0 > 0.0 && raw.lambda0 <= 1.0) {
        violations.push(ParamViolation::BadLambda(raw.lambda0));
    }

    let vehicle_count = match raw.population {
        Population::Count(n) => n,
        Population::DensityPerKm(d) => {
            if d < 0.0 {
                violations.push(ParamViolation::NegativeDensity(d));
                0
            } else {
                (d * raw.highway_length_m / 1000.0).round() as usize
            }
        }
    };

    if violations.is_empty() {
        Ok(ValidatedParams {
            params: raw,
            vehicle_count,
        })
    } else {
        Err(Error::InvalidParams(violations))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    /// Position at time 0, meters in [0, L].
    pub position_m: f64,
    /// Signed constant speed, m/s. Positive means increasing position.
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSnapshot {
    pub vehicles: Vec<Vehicle>,
    /// Vehicle nearest the highway midpoint, if any vehicle exists.
    pub source_id: Option<usize>,
    pub seed: u64,
    pub trial_index: u64,
}

impl TrafficSnapshot {
    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }
}

fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    // One independent substream per trial: the stream id keeps draws of
    // different trials disjoint regardless of how many values each consumes.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index.into());
    rng
}

/// Draws one traffic snapshot. Pure in `(params, seed, trial_index)`.
pub fn generate_traffic(params: &ValidatedParams, seed: u64, trial_index: u64) -> TrafficSnapshot {
    let mut rng = trial_rng(seed, trial_index);
    let length = params.highway_length_m;
    let mut vehicles = Vec::new();

    match params.placement {
        Placement::Uniform => {
            let n = params.vehicle_count();
            vehicles.reserve(n);
            for id in 0..n {
                let position_m = rng.random::<f64>() * length;
                vehicles.push(Vehicle {
                    id,
                    position_m,
                    speed_mps: draw_speed(&mut rng, params),
                });
            }
        }
        Placement::Poisson => {
            // Poisson process with mean vehicle_count over [0, L], built
            // from exponential gaps; the realized count is random.
            let rate = params.vehicle_count() as f64 / length;
            if rate > 0.0 {
                let mut position = 0.0f64;
                loop {
                    position += -rng.random::<f64>().max(f64::MIN_POSITIVE).ln() / rate;
                    if position > length {
                        break;
                    }
                    let id = vehicles.len();
                    vehicles.push(Vehicle {
                        id,
                        position_m: position,
                        speed_mps: draw_speed(&mut rng, params),
                    });
                }
            }
        }
    }

    let source_id = vehicles
        .iter()
        .min_by(|a, b| {
            let da = (a.position_m - length / 2.0).abs();
            let db = (b.position_m - length / 2.0).abs();
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
        .map(|v| v.id);

    TrafficSnapshot {
        vehicles,
        source_id,
        seed,
        trial_index,
    }
}

fn draw_speed(rng: &mut ChaCha8Rng, params: &ValidatedParams) -> f64 {
    let magnitude = params.speed_min_mps
        + rng.random::<f64>() * (params.speed_max_mps - params.speed_min_mps);
    match params.direction_mode {
        DirectionMode::OneWay => magnitude,
        DirectionMode::TwoWay => {
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioParams {
        ScenarioParams::default()
    }

    #[test]
    fn default_params_validate() {
        let p = validate_params(base()).unwrap();
        assert_eq!(p.vehicle_count(), 1060);
    }

    #[test]
    fn accepts_the_reference_scenario() {
        let raw = ScenarioParams {
            highway_length_m: 100_000.0,
            range_m0: 200.0,
            speed_min_mps: 20.0,
            speed_max_mps: 30.0,
            target_prob_p: 0.9,
            gamma: 0.3,
            epsilon: 0.1,
            ..base()
        };
        assert!(validate_params(raw).is_ok());
    }

    #[test]
    fn rejects_degenerate_probability() {
        let raw = ScenarioParams {
            target_prob_p: 0.1,
            gamma: 0.3,
            ..base()
        };
        let err = validate_params(raw).unwrap_err();
        match err {
            Error::InvalidParams(v) => assert!(v
                .iter()
                .any(|x| matches!(x, ParamViolation::DegenerateProbability { .. }))),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_inverted_speed_range() {
        let raw = ScenarioParams {
            speed_min_mps: 30.0,
            speed_max_mps: 20.0,
            ..base()
        };
        let err = validate_params(raw).unwrap_err();
        match err {
            Error::InvalidParams(v) => assert!(v
                .iter()
                .any(|x| matches!(x, ParamViolation::EmptySpeedRange { .. }))),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reports_all_violations_at_once() {
        let raw = ScenarioParams {
            highway_length_m: -1.0,
            speed_min_mps: 30.0,
            speed_max_mps: 20.0,
            epsilon: 0.0,
            ..base()
        };
        match validate_params(raw).unwrap_err() {
            Error::InvalidParams(v) => assert!(v.len() >= 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn density_resolves_to_count() {
        let raw = ScenarioParams {
            highway_length_m: 100_000.0,
            population: Population::DensityPerKm(10.6),
            ..base()
        };
        let p = validate_params(raw).unwrap();
        assert_eq!(p.vehicle_count(), 1060);
    }

    #[test]
    fn empty_snapshot_has_no_source() {
        let raw = ScenarioParams {
            population: Population::Count(0),
            ..base()
        };
        let p = validate_params(raw).unwrap();
        let snap = generate_traffic(&p, 7, 0);
        assert!(snap.is_empty());
        assert_eq!(snap.source_id, None);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = validate_params(ScenarioParams {
            population: Population::Count(1000),
            ..base()
        })
        .unwrap();
        let a = generate_traffic(&p, 42, 0);
        let b = generate_traffic(&p, 42, 0);
        assert_eq!(a, b);
        let c = generate_traffic(&p, 42, 1);
        assert_ne!(a, c);
    }

    #[test]
    fn source_is_nearest_to_midpoint() {
        let p = validate_params(ScenarioParams {
            population: Population::Count(200),
            ..base()
        })
        .unwrap();
        let snap = generate_traffic(&p, 3, 5);
        let mid = p.highway_length_m / 2.0;
        let src = snap.source_id.unwrap();
        let src_dist = (snap.vehicles[src].position_m - mid).abs();
        for v in &snap.vehicles {
            assert!((v.position_m - mid).abs() >= src_dist);
        }
    }

    #[test]
    fn positions_and_speeds_in_bounds() {
        let p = validate_params(ScenarioParams {
            population: Population::Count(5000),
            ..base()
        })
        .unwrap();
        let snap = generate_traffic(&p, 11, 2);
        for v in &snap.vehicles {
            assert!(v.position_m >= 0.0 && v.position_m <= p.highway_length_m);
            let mag = v.speed_mps.abs();
            assert!(mag >= p.speed_min_mps && mag <= p.speed_max_mps);
        }
    }

    #[test]
    fn position_mean_matches_uniform_moments() {
        // Mean of n=10^4 uniform positions on [0, L] is within 3 sigma of
        // L/2, sigma = L / sqrt(12 n).
        let length = 100_000.0;
        let n = 10_000usize;
        let p = validate_params(ScenarioParams {
            highway_length_m: length,
            population: Population::Count(n),
            ..base()
        })
        .unwrap();
        let snap = generate_traffic(&p, 42, 0);
        let mean: f64 = snap.vehicles.iter().map(|v| v.position_m).sum::<f64>() / n as f64;
        let sigma = length / (12.0 * n as f64).sqrt();
        assert!(
            (mean - length / 2.0).abs() < 3.0 * sigma,
            "mean {mean} deviates from {} by more than 3 sigma {}",
            length / 2.0,
            3.0 * sigma
        );
    }

    #[test]
    fn trial_streams_are_independent() {
        // Consuming a different number of draws in trial 0 (via a different
        // vehicle count) must not change what trial 1 produces.
        let p_small = validate_params(ScenarioParams {
            population: Population::Count(10),
            ..base()
        })
        .unwrap();
        let p_large = validate_params(ScenarioParams {
            population: Population::Count(5000),
            ..base()
        })
        .unwrap();
        let t1_before = generate_traffic(&p_small, 9, 1);
        let _ = generate_traffic(&p_large, 9, 0);
        let t1_after = generate_traffic(&p_small, 9, 1);
        assert_eq!(t1_before, t1_after);
    }

    #[test]
    fn poisson_placement_is_sorted_and_in_bounds() {
        let p = validate_params(ScenarioParams {
            population: Population::Count(500),
            placement: Placement::Poisson,
            ..base()
        })
        .unwrap();
        let snap = generate_traffic(&p, 1, 0);
        assert!(!snap.is_empty());
        for w in snap.vehicles.windows(2) {
            assert!(w[0].position_m <= w[1].position_m);
        }
        assert!(snap.vehicles.iter().all(|v| v.position_m <= p.highway_length_m));
        // ids dense
        for (i, v) in snap.vehicles.iter().enumerate() {
            assert_eq!(v.id, i);
        }
    }
}
