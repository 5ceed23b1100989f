//! Python bindings: scenario construction, the spacing optimizer, single
//! snapshot simulation, and connectivity measurement.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use iovsim::layout::SpacingSpec;
use iovsim::metrics::connectivity_breakdown;
use iovsim::optimizer::{self, optimize_spacing};
use iovsim::propagation::{build_nodes, event_r, simulate, ContactRule};
use iovsim::scenario::{
    generate_traffic, validate_params, DirectionMode, Placement, Population, ScenarioParams,
    ValidatedParams,
};
use iovsim::ConnectionTopology;

fn value_err(e: iovsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_topology(name: &str) -> PyResult<ConnectionTopology> {
    match name {
        "connected" => Ok(ConnectionTopology::Connected),
        "unconnected" => Ok(ConnectionTopology::Unconnected),
        other => Err(PyValueError::new_err(format!(
            "topology must be 'connected' or 'unconnected', got '{other}'"
        ))),
    }
}

/// One highway scenario: geometry, traffic population, radio range and
/// the optimizer's probability knobs. Validated on construction.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: ValidatedParams,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (
        highway_length_m = 100_000.0,
        range_m0 = 200.0,
        vehicle_count = 1060,
        speed_min_mps = 20.0,
        speed_max_mps = 30.0,
        delay_budget_s = 60.0,
        message_radius_m = 20_000.0,
        target_fraction_q = 0.9,
        target_prob_p = 0.9,
        gamma = 0.3,
        epsilon = 0.1,
        lambda0 = 0.1,
        one_way = false,
        directional_forwarding = false,
        poisson_placement = false,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        highway_length_m: f64,
        range_m0: f64,
        vehicle_count: usize,
        speed_min_mps: f64,
        speed_max_mps: f64,
        delay_budget_s: f64,
        message_radius_m: f64,
        target_fraction_q: f64,
        target_prob_p: f64,
        gamma: f64,
        epsilon: f64,
        lambda0: f64,
        one_way: bool,
        directional_forwarding: bool,
        poisson_placement: bool,
    ) -> PyResult<Self> {
        let params = ScenarioParams {
            highway_length_m,
            range_m0,
            population: Population::Count(vehicle_count),
            speed_min_mps,
            speed_max_mps,
            delay_budget_s,
            message_radius_m,
            target_fraction_q,
            target_prob_p,
            gamma,
            epsilon,
            lambda0,
            direction_mode: if one_way {
                DirectionMode::OneWay
            } else {
                DirectionMode::TwoWay
            },
            directional_forwarding,
            placement: if poisson_placement {
                Placement::Poisson
            } else {
                Placement::Uniform
            },
        };
        Ok(Scenario {
            inner: validate_params(params).map_err(value_err)?,
        })
    }

    #[getter]
    fn vehicle_count(&self) -> usize {
        self.inner.vehicle_count()
    }

    #[getter]
    fn highway_length_m(&self) -> f64 {
        self.inner.highway_length_m
    }

    #[getter]
    fn range_m0(&self) -> f64 {
        self.inner.range_m0
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(highway_length_m={}, vehicle_count={}, range_m0={}, delay_budget_s={})",
            self.inner.highway_length_m,
            self.inner.vehicle_count(),
            self.inner.range_m0,
            self.inner.delay_budget_s
        )
    }
}

/// Result of the randomized spacing search.
#[pyclass]
struct OptimizeResult {
    #[pyo3(get)]
    spacing_m: f64,
    #[pyo3(get)]
    h: u32,
    #[pyo3(get)]
    t: u64,
    #[pyo3(get)]
    delta: f64,
    #[pyo3(get)]
    terminated_by: String,
    /// (distance_m, successes, trials) per sampled grid point.
    #[pyo3(get)]
    grid: Vec<(f64, u64, u64)>,
}

/// Delivery outcome of one snapshot simulation.
#[pyclass]
struct SimulationReport {
    /// Receive time per node id (vehicles first, then ESs); None when
    /// the node is not reached within the delay budget.
    #[pyo3(get)]
    receive_time_s: Vec<Option<f64>>,
    #[pyo3(get)]
    vehicle_count: usize,
    #[pyo3(get)]
    es_count: usize,
    #[pyo3(get)]
    delivered_count: usize,
    /// Measured P(t0): the largest direct fan-out of any single node.
    #[pyo3(get)]
    max_fanout: usize,
}

/// Direct/indirect/total connectivity probabilities.
#[pyclass]
struct Connectivity {
    #[pyo3(get)]
    direct: f64,
    #[pyo3(get)]
    indirect: f64,
    #[pyo3(get)]
    total: f64,
    #[pyo3(get)]
    stderr_total: f64,
}

/// Least non-negative h with (1+epsilon)^h * m0 >= 2D.
#[pyfunction]
fn compute_h(radius_d: f64, m0: f64, epsilon: f64) -> u32 {
    optimizer::compute_h(radius_d, m0, epsilon)
}

/// Least non-negative t with h * exp(-t delta^2 / 2) <= lambda0.
#[pyfunction]
fn compute_t(h: u32, lambda0: f64, delta: f64) -> PyResult<u64> {
    optimizer::compute_t(h, lambda0, delta).map_err(value_err)
}

/// Equally spaced ES positions on [0, length]; pass exactly one of
/// `spacing_m` or `count`.
#[pyfunction]
#[pyo3(signature = (length_m, spacing_m = None, count = None))]
fn place_servers(length_m: f64, spacing_m: Option<f64>, count: Option<usize>) -> PyResult<Vec<f64>> {
    let spec = match (spacing_m, count) {
        (Some(d), None) => SpacingSpec::Spacing(d),
        (None, Some(k)) => SpacingSpec::Count(k),
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of spacing_m or count",
            ))
        }
    };
    Ok(iovsim::place_servers(length_m, spec)
        .map_err(value_err)?
        .positions_m()
        .to_vec())
}

/// Runs Algorithm 1: the randomized geometric search for the largest
/// workable ES spacing.
#[pyfunction]
#[pyo3(signature = (scenario, topology = "connected", seed = 0))]
fn optimize(scenario: &Scenario, topology: &str, seed: u64) -> PyResult<OptimizeResult> {
    let topology = parse_topology(topology)?;
    let result = optimize_spacing(&scenario.inner, &topology, seed).map_err(value_err)?;
    Ok(OptimizeResult {
        spacing_m: result.spacing_m,
        h: result.h,
        t: result.t,
        delta: result.delta,
        terminated_by: result.terminated_by.to_string(),
        grid: result
            .grid
            .iter()
            .map(|g| (g.distance_m, g.successes, g.trials))
            .collect(),
    })
}

/// Simulates one random snapshot: source broadcast, earliest-arrival
/// delivery times for every vehicle and ES.
#[pyfunction]
#[pyo3(signature = (scenario, es_count, topology = "connected", seed = 0, trial = 0))]
fn simulate_once(
    scenario: &Scenario,
    es_count: usize,
    topology: &str,
    seed: u64,
    trial: u64,
) -> PyResult<SimulationReport> {
    let topology = parse_topology(topology)?;
    let params = &scenario.inner;
    let traffic = generate_traffic(params, seed, trial);
    let layout =
        iovsim::place_servers(params.highway_length_m, SpacingSpec::Count(es_count))
            .map_err(value_err)?;
    let rule = ContactRule::from_params(params);
    let report = simulate(&traffic, &layout, &topology, &rule).map_err(value_err)?;
    let nodes = build_nodes(&traffic, &layout);
    Ok(SimulationReport {
        receive_time_s: report.receive_time_s.clone(),
        vehicle_count: traffic.len(),
        es_count: nodes.len() - traffic.len(),
        delivered_count: report.delivered_count(),
        max_fanout: report.max_fanout,
    })
}

/// One Bernoulli draw of the event R_g(d, q, M, D).
#[pyfunction]
#[pyo3(signature = (spacing_m, scenario, topology = "connected", seed = 0, trial = 0))]
fn sample_event(
    spacing_m: f64,
    scenario: &Scenario,
    topology: &str,
    seed: u64,
    trial: u64,
) -> PyResult<bool> {
    let topology = parse_topology(topology)?;
    event_r(spacing_m, &scenario.inner, &topology, seed, trial).map_err(value_err)
}

/// Monte-Carlo direct/indirect/total connectivity at a given ES count.
#[pyfunction]
#[pyo3(signature = (scenario, es_count, seed = 0, trials = 1000))]
fn connectivity(
    scenario: &Scenario,
    es_count: usize,
    seed: u64,
    trials: u64,
) -> PyResult<Connectivity> {
    let b = connectivity_breakdown(&scenario.inner, es_count, seed, trials).map_err(value_err)?;
    Ok(Connectivity {
        direct: b.direct,
        indirect: b.indirect,
        total: b.total,
        stderr_total: b.stderr_total,
    })
}

#[pymodule]
fn iovsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<OptimizeResult>()?;
    m.add_class::<SimulationReport>()?;
    m.add_class::<Connectivity>()?;
    m.add_function(wrap_pyfunction!(compute_h, m)?)?;
    m.add_function(wrap_pyfunction!(compute_t, m)?)?;
    m.add_function(wrap_pyfunction!(place_servers, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_once, m)?)?;
    m.add_function(wrap_pyfunction!(sample_event, m)?)?;
    m.add_function(wrap_pyfunction!(connectivity, m)?)?;
    Ok(())
}
