//! Command-line front end: config loading, dispatch, CSV emission, and
//! run manifests. Every command is reproducible from its manifest alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::Error;
use crate::layout::{place_servers, SpacingSpec};
use crate::metrics::{baseline_compare, connectivity_breakdown, sweep, SweepAxis};
use crate::optimizer::{compute_h, compute_t, optimize_spacing};
use crate::oracle;
use crate::propagation::{build_nodes, simulate, ContactRule};
use crate::scenario::{generate_traffic, validate_params, ValidatedParams};
use crate::testkit::random_instance;

#[derive(Parser, Debug)]
#[command(name = "iovsim", version, about = "Highway edge-server placement simulator")]
pub struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Monte-Carlo trials (overrides the config).
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Worker threads for trial execution (default: logical CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Output directory for CSV files and manifests.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Per-key config override, repeatable: --set key=value.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Sweep axis or target list: --axis es_count=100,200,300.
    #[arg(long, global = true, value_name = "KEY=V1,V2,...")]
    pub axis: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the randomized spacing search.
    Optimize,
    /// Simulate one snapshot and write the delivery trace.
    SimulateOnce,
    /// Connectivity sweep along an axis.
    Sweep,
    /// Minimum ES counts: relay-aware scheme vs direct-coverage baseline.
    CompareBaseline,
    /// Run the oracle-equivalence and formula self-checks.
    Verify,
    /// Fit the highway length that hits a target total connectivity.
    Calibrate {
        /// Target total connectivity probability.
        #[arg(long, default_value_t = 0.775)]
        target: f64,
    },
}

/// exit code 0 = success, 1 = validation error, 2 = runtime failure
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CommandError::Validation(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(CommandError::Runtime(message)) => {
            eprintln!("error: {message}");
            2
        }
    }
}

enum CommandError {
    Validation(String),
    Runtime(String),
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::MissingKey(_)
            | Error::UnknownKey(_)
            | Error::TypeError { .. }
            | Error::NonPositiveSpacing => CommandError::Validation(e.to_string()),
            other => CommandError::Runtime(other.to_string()),
        }
    }
}

type CommandResult = Result<(), CommandError>;

fn execute(cli: Cli) -> CommandResult {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let pairs: Vec<(String, String)> = cli
        .overrides
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    CommandError::Validation(format!("--set expects key=value, got `{s}`"))
                })
        })
        .collect::<Result<_, _>>()?;
    config.apply_overrides(&pairs)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(dir) = &cli.output {
        config.output_path = Some(dir.to_string_lossy().into_owned());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CommandError::Runtime(format!("cannot build worker pool: {e}")))?;
    pool.install(|| dispatch(&cli, config))
}

fn dispatch(cli: &Cli, config: RunConfig) -> CommandResult {
    let out_dir = PathBuf::from(config.output_path.clone().unwrap_or_else(|| "out".to_string()));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CommandError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let started = Instant::now();
    match &cli.command {
        Command::Optimize => cmd_optimize(&config, &out_dir, started),
        Command::SimulateOnce => cmd_simulate_once(&config, &out_dir, started),
        Command::Sweep => cmd_sweep(cli, &config, &out_dir, started),
        Command::CompareBaseline => cmd_compare(cli, &config, &out_dir, started),
        Command::Verify => cmd_verify(&config),
        Command::Calibrate { target } => cmd_calibrate(&config, *target, &out_dir),
    }
}

fn validated(config: &RunConfig) -> Result<ValidatedParams, CommandError> {
    Ok(validate_params(config.scenario.clone())?)
}

fn write_file(dir: &Path, name: &str, content: &str) -> CommandResult {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CommandError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(
    dir: &Path,
    name: &str,
    command: &str,
    config: &RunConfig,
    started: Instant,
    extra: &[(String, String)],
) -> CommandResult {
    let mut text = String::new();
    let _ = writeln!(text, "command = {command}");
    let _ = writeln!(text, "elapsed_s = {:.3}", started.elapsed().as_secs_f64());
    for (k, v) in extra {
        let _ = writeln!(text, "{k} = {v}");
    }
    let _ = writeln!(text, "# effective configuration");
    text.push_str(&config.echo());
    write_file(dir, name, &text)
}

fn cmd_optimize(config: &RunConfig, out_dir: &Path, started: Instant) -> CommandResult {
    let params = validated(config)?;
    let result = optimize_spacing(&params, &config.topology, config.seed)?;

    let mut csv = String::from("d_i,S_i,t\n");
    for point in &result.grid {
        let _ = writeln!(csv, "{},{},{}", point.distance_m, point.successes, point.trials);
    }
    write_file(out_dir, "optimize.csv", &csv)?;

    // representative fan-out measurement at the returned spacing
    let traffic = generate_traffic(&params, config.seed, 0);
    let layout = place_servers(params.highway_length_m, SpacingSpec::Spacing(result.spacing_m))?;
    let rule = ContactRule::from_params(&params);
    let report = simulate(&traffic, &layout, &config.topology, &rule)?;

    println!(
        "d = {} m (terminated by {}, h = {}, t = {}, delta = {})",
        result.spacing_m, result.terminated_by, result.h, result.t, result.delta
    );
    write_manifest(
        out_dir,
        "optimize_manifest.txt",
        "optimize",
        config,
        started,
        &[
            ("spacing_m".to_string(), result.spacing_m.to_string()),
            ("terminated_by".to_string(), result.terminated_by.to_string()),
            ("h".to_string(), result.h.to_string()),
            ("t".to_string(), result.t.to_string()),
            ("measured_p_t0".to_string(), report.max_fanout.to_string()),
        ],
    )
}

fn cmd_simulate_once(config: &RunConfig, out_dir: &Path, started: Instant) -> CommandResult {
    let params = validated(config)?;
    let spec = match (config.es_spacing_m, config.es_count) {
        (Some(d), None) => SpacingSpec::Spacing(d),
        (None, Some(k)) => SpacingSpec::Count(k),
        (None, None) => {
            return Err(Error::MissingKey("es_spacing_m or es_count".to_string()).into())
        }
        (Some(_), Some(_)) => unreachable!("config parser enforces exclusivity"),
    };
    let layout = place_servers(params.highway_length_m, spec)?;
    let traffic = generate_traffic(&params, config.seed, 0);
    let rule = ContactRule::from_params(&params);
    let report = simulate(&traffic, &layout, &config.topology, &rule)?;
    let nodes = build_nodes(&traffic, &layout);

    let mut csv = String::from("node_id,is_es,receive_time_s,parent_id\n");
    for node in &nodes {
        let Some(time) = report.receive_time_s[node.id] else {
            continue;
        };
        let parent = report.witness[node.id]
            .map(|(p, _)| p.to_string())
            .unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{}", node.id, node.is_es as u8, time, parent);
    }
    write_file(out_dir, "simulate_once.csv", &csv)?;

    println!(
        "delivered {} of {} nodes within {} s (max fan-out {})",
        report.delivered_count(),
        nodes.len(),
        params.delay_budget_s,
        report.max_fanout
    );
    write_manifest(
        out_dir,
        "simulate_once_manifest.txt",
        "simulate-once",
        config,
        started,
        &[
            ("delivered".to_string(), report.delivered_count().to_string()),
            ("nodes".to_string(), nodes.len().to_string()),
            ("measured_p_t0".to_string(), report.max_fanout.to_string()),
        ],
    )
}

fn parse_axis(cli: &Cli) -> Result<(String, Vec<String>), CommandError> {
    let axis = cli
        .axis
        .as_ref()
        .ok_or_else(|| Error::MissingKey("--axis".to_string()))?;
    let (key, values) = axis
        .split_once('=')
        .ok_or_else(|| CommandError::Validation(format!("--axis expects KEY=V1,V2,..., got `{axis}`")))?;
    Ok((
        key.trim().to_string(),
        values.split(',').map(|v| v.trim().to_string()).collect(),
    ))
}

fn parse_values<T: std::str::FromStr>(key: &str, values: &[String]) -> Result<Vec<T>, CommandError>
where
    T::Err: std::fmt::Display,
{
    values
        .iter()
        .map(|v| {
            v.parse::<T>().map_err(|e| {
                CommandError::Validation(format!("bad axis value `{v}` for {key}: {e}"))
            })
        })
        .collect()
}

fn cmd_sweep(cli: &Cli, config: &RunConfig, out_dir: &Path, started: Instant) -> CommandResult {
    let params = validated(config)?;
    let (key, raw_values) = parse_axis(cli)?;
    let axis = match key.as_str() {
        "es_count" => SweepAxis::EsCount(parse_values(&key, &raw_values)?),
        "vehicle_count" => SweepAxis::VehicleCount(parse_values(&key, &raw_values)?),
        "range_m0" => SweepAxis::RangeM0(parse_values(&key, &raw_values)?),
        "speed" => SweepAxis::Speed(parse_values(&key, &raw_values)?),
        other => {
            return Err(CommandError::Validation(format!(
                "unknown sweep axis `{other}` (expected es_count, vehicle_count, range_m0 or speed)"
            )))
        }
    };
    let base_es_count = match axis {
        SweepAxis::EsCount(_) => 0,
        _ => config
            .es_count
            .ok_or_else(|| Error::MissingKey("es_count".to_string()))?,
    };
    let rows = sweep(&params, base_es_count, &axis, config.seed, config.trials)?;

    let mut csv = String::from("axis_value,direct,indirect,total,stderr_total,trials,seed\n");
    for row in &rows {
        let b = &row.breakdown;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.axis_value, b.direct, b.indirect, b.total, b.stderr_total, config.trials, config.seed
        );
    }
    write_file(out_dir, "sweep.csv", &csv)?;
    println!("sweep over {key}: {} rows written", rows.len());
    write_manifest(
        out_dir,
        "sweep_manifest.txt",
        "sweep",
        config,
        started,
        &[("axis".to_string(), cli.axis.clone().unwrap_or_default())],
    )
}

fn cmd_compare(cli: &Cli, config: &RunConfig, out_dir: &Path, started: Instant) -> CommandResult {
    let params = validated(config)?;
    let (key, raw_values) = parse_axis(cli)?;
    if key != "target_probability" {
        return Err(CommandError::Validation(format!(
            "compare-baseline expects --axis target_probability=..., got `{key}`"
        )));
    }
    let targets: Vec<f64> = parse_values(&key, &raw_values)?;
    let rows = baseline_compare(&params, &targets, config.seed, config.trials)?;

    let mut csv = String::from("target,proposed_es_count,baseline_es_count\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{},{}", row.target, row.proposed_count, row.baseline_count);
    }
    write_file(out_dir, "compare_baseline.csv", &csv)?;
    println!("compared {} targets", rows.len());
    write_manifest(
        out_dir,
        "compare_baseline_manifest.txt",
        "compare-baseline",
        config,
        started,
        &[],
    )
}

fn cmd_verify(config: &RunConfig) -> CommandResult {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // formula suite: implementation vs closed forms
    let mut formula_mismatches = 0usize;
    for _ in 0..1000 {
        let m0 = rng.random_range(10.0..1000.0);
        let radius = rng.random_range(m0..200.0 * m0);
        let epsilon = rng.random_range(0.01..0.9);
        let h = compute_h(radius, m0, epsilon);
        if h != oracle::reference_h(radius, m0, epsilon) {
            formula_mismatches += 1;
        }
        let lambda0 = rng.random_range(0.01..1.0);
        let delta = rng.random_range(0.01..0.9);
        let t = compute_t(h.max(1), lambda0, delta).expect("delta > 0");
        if t != oracle::reference_t(h.max(1), lambda0, delta) {
            formula_mismatches += 1;
        }
    }
    println!("formula suite: 1000 draws, {formula_mismatches} mismatches");

    // oracle equivalence on random small instances
    let instances = 60u64;
    let mut delivery_mismatches = 0usize;
    for i in 0..instances {
        let inst = random_instance(config.seed.wrapping_add(i).wrapping_mul(2654435761));
        let report =
            crate::propagation::simulate_nodes(&inst.nodes, &inst.wired, &[inst.source], &inst.rule);
        let reference =
            oracle::reference_simulate(&inst.nodes, &inst.wired, &[inst.source], &inst.rule);
        for id in 0..inst.nodes.len() {
            match (report.receive_time_s[id], reference[id]) {
                (None, None) => {}
                (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => {}
                _ => delivery_mismatches += 1,
            }
        }
    }
    println!("oracle suite: {instances} instances, {delivery_mismatches} node mismatches");

    if formula_mismatches + delivery_mismatches > 0 {
        return Err(CommandError::Runtime("verification failed".to_string()));
    }
    println!("verify: all checks passed");
    Ok(())
}

fn cmd_calibrate(config: &RunConfig, target: f64, out_dir: &Path) -> CommandResult {
    let params = validated(config)?;
    let es_count = config
        .es_count
        .ok_or_else(|| Error::MissingKey("es_count".to_string()))?;
    let measure = |length: f64| -> Result<f64, CommandError> {
        let cell = params.with_highway_length(length)?;
        Ok(connectivity_breakdown(&cell, es_count, config.seed, config.trials)?.total)
    };

    // total connectivity falls as the highway stretches; bracket then bisect
    let mut lo = 10_000.0f64;
    let mut hi = 10_000_000.0f64;
    if measure(lo)? < target {
        return Err(CommandError::Runtime(format!(
            "target {target} not reachable even at L = {lo} m"
        )));
    }
    if measure(hi)? >= target {
        return Err(CommandError::Runtime(format!(
            "target {target} still met at L = {hi} m; no crossing to fit"
        )));
    }
    for _ in 0..26 {
        let mid = (lo + hi) / 2.0;
        if measure(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fitted = (lo / 100.0).round() * 100.0;
    let achieved = measure(fitted)?;
    println!("fitted highway_length_m = {fitted} (total = {achieved:.4}, target = {target})");

    let mut fitted_config = config.clone();
    fitted_config.scenario.highway_length_m = fitted;
    write_file(out_dir, "calibration.cfg", &fitted_config.echo())?;
    Ok(())
}
