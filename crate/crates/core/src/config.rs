//! Flat key=value run configuration with a strict schema.
//!
//! One key per scenario field, plus the run-level keys (ES placement,
//! topology, trials, seed, output path). Unknown keys are errors; `#`
//! starts a comment. Command-line overrides reuse the same parser and
//! win over file values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::layout::ConnectionTopology;
use crate::scenario::{DirectionMode, Placement, Population, ScenarioParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioParams,
    pub es_spacing_m: Option<f64>,
    pub es_count: Option<usize>,
    pub topology: ConnectionTopology,
    pub trials: u64,
    pub seed: u64,
    pub output_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioParams::default(),
            es_spacing_m: None,
            es_count: None,
            topology: ConnectionTopology::Connected,
            trials: 1000,
            seed: 0,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_str_strict(&text)
    }

    pub fn from_str_strict(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (index, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_no = index + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::TypeError {
                    key: line.to_string(),
                    line: line_no,
                    message: "expected key = value".to_string(),
                });
            };
            config.set(key.trim(), value.trim(), line_no)?;
        }
        Ok(config)
    }

    /// Applies `key=value` override pairs; overrides win over file values.
    pub fn apply_overrides(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (key, value) in pairs {
            self.set(key, value, 0)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let bad = |message: String| Error::TypeError {
            key: key.to_string(),
            line,
            message,
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| bad(format!("expected a number, got `{v}` ({e})")))
        };
        let parse_u64 = |v: &str| {
            v.parse::<u64>()
                .map_err(|e| bad(format!("expected a non-negative integer, got `{v}` ({e})")))
        };
        let parse_bool = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad(format!("expected true or false, got `{v}`"))),
        };

        match key {
            "highway_length_m" => self.scenario.highway_length_m = parse_f64(value)?,
            "range_m0" => self.scenario.range_m0 = parse_f64(value)?,
            "speed_min_mps" => self.scenario.speed_min_mps = parse_f64(value)?,
            "speed_max_mps" => self.scenario.speed_max_mps = parse_f64(value)?,
            "vehicle_count" => {
                self.scenario.population = Population::Count(parse_u64(value)? as usize)
            }
            "density_per_km" => {
                self.scenario.population = Population::DensityPerKm(parse_f64(value)?)
            }
            "delay_budget_s" => self.scenario.delay_budget_s = parse_f64(value)?,
            "message_radius_m" => self.scenario.message_radius_m = parse_f64(value)?,
            "target_fraction_q" => self.scenario.target_fraction_q = parse_f64(value)?,
            "target_prob_p" => self.scenario.target_prob_p = parse_f64(value)?,
            "gamma" => self.scenario.gamma = parse_f64(value)?,
            "epsilon" => self.scenario.epsilon = parse_f64(value)?,
            "lambda0" => self.scenario.lambda0 = parse_f64(value)?,
            "direction_mode" => {
                self.scenario.direction_mode = match value {
                    "one-way" => DirectionMode::OneWay,
                    "two-way" => DirectionMode::TwoWay,
                    _ => return Err(bad(format!("expected one-way or two-way, got `{value}`"))),
                }
            }
            "directional_forwarding" => {
                self.scenario.directional_forwarding = parse_bool(value)?
            }
            "placement" => {
                self.scenario.placement = match value {
                    "uniform" => Placement::Uniform,
                    "poisson" => Placement::Poisson,
                    _ => return Err(bad(format!("expected uniform or poisson, got `{value}`"))),
                }
            }
            "es_spacing_m" => {
                if self.es_count.is_some() {
                    return Err(bad("es_spacing_m conflicts with es_count".to_string()));
                }
                self.es_spacing_m = Some(parse_f64(value)?);
            }
            "es_count" => {
                if self.es_spacing_m.is_some() {
                    return Err(bad("es_count conflicts with es_spacing_m".to_string()));
                }
                self.es_count = Some(parse_u64(value)? as usize);
            }
            "topology" => {
                self.topology = match value {
                    "connected" => ConnectionTopology::Connected,
                    "unconnected" => ConnectionTopology::Unconnected,
                    _ => {
                        return Err(bad(format!(
                            "expected connected or unconnected, got `{value}`"
                        )))
                    }
                }
            }
            "trials" => self.trials = parse_u64(value)?,
            "seed" => self.seed = parse_u64(value)?,
            "output_path" => self.output_path = Some(value.to_string()),
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Canonical echo of the effective configuration, one key per line.
    pub fn echo(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(out, "highway_length_m = {}", s.highway_length_m);
        let _ = writeln!(out, "range_m0 = {}", s.range_m0);
        let _ = writeln!(out, "speed_min_mps = {}", s.speed_min_mps);
        let _ = writeln!(out, "speed_max_mps = {}", s.speed_max_mps);
        match s.population {
            Population::Count(n) => {
                let _ = writeln!(out, "vehicle_count = {n}");
            }
            Population::DensityPerKm(d) => {
                let _ = writeln!(out, "density_per_km = {d}");
            }
        }
        let _ = writeln!(out, "delay_budget_s = {}", s.delay_budget_s);
        let _ = writeln!(out, "message_radius_m = {}", s.message_radius_m);
        let _ = writeln!(out, "target_fraction_q = {}", s.target_fraction_q);
        let _ = writeln!(out, "target_prob_p = {}", s.target_prob_p);
        let _ = writeln!(out, "gamma = {}", s.gamma);
        let _ = writeln!(out, "epsilon = {}", s.epsilon);
        let _ = writeln!(out, "lambda0 = {}", s.lambda0);
        let _ = writeln!(
            out,
            "direction_mode = {}",
            match s.direction_mode {
                DirectionMode::OneWay => "one-way",
                DirectionMode::TwoWay => "two-way",
            }
        );
        let _ = writeln!(out, "directional_forwarding = {}", s.directional_forwarding);
        let _ = writeln!(
            out,
            "placement = {}",
            match s.placement {
                Placement::Uniform => "uniform",
                Placement::Poisson => "poisson",
            }
        );
        if let Some(d) = self.es_spacing_m {
            let _ = writeln!(out, "es_spacing_m = {d}");
        }
        if let Some(k) = self.es_count {
            let _ = writeln!(out, "es_count = {k}");
        }
        let _ = writeln!(
            out,
            "topology = {}",
            match self.topology {
                ConnectionTopology::Connected => "connected",
                ConnectionTopology::Unconnected => "unconnected",
                ConnectionTopology::Custom(_) => "custom",
            }
        );
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(p) = &self.output_path {
            let _ = writeln!(out, "output_path = {p}");
        }
        out
    }
}
