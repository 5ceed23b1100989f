use std::fmt;

use thiserror::Error;

/// A single violated constraint found while validating scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// A length or time that must be strictly positive is not.
    NegativeLength(&'static str),
    /// speed_min_mps > speed_max_mps.
    EmptySpeedRange { min: f64, max: f64 },
    /// p - gamma/3 <= 0, or gamma outside (0, p): the success test of the
    /// randomized search becomes vacuous.
    DegenerateProbability { p: f64, gamma: f64 },
    /// epsilon outside (0, 1).
    ZeroEpsilon(f64),
    /// A probability-valued field outside [0, 1].
    BadProbability { field: &'static str, value: f64 },
    /// lambda0 outside (0, 1].
    BadLambda(f64),
    /// Negative vehicle density.
    NegativeDensity(f64),
    /// Negative speed magnitude bound.
    NegativeSpeed(f64),
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NegativeLength(field) => {
                write!(f, "{field} must be strictly positive")
            }
            ParamViolation::EmptySpeedRange { min, max } => {
                write!(f, "empty speed range: speed_min_mps {min} > speed_max_mps {max}")
            }
            ParamViolation::DegenerateProbability { p, gamma } => {
                write!(f, "degenerate probability: need 0 < gamma < p and p - gamma/3 > 0 (p={p}, gamma={gamma})")
            }
            ParamViolation::ZeroEpsilon(e) => write!(f, "epsilon must lie in (0, 1), got {e}"),
            ParamViolation::BadProbability { field, value } => {
                write!(f, "{field} must lie in [0, 1], got {value}")
            }
            ParamViolation::BadLambda(l) => write!(f, "lambda0 must lie in (0, 1], got {l}"),
            ParamViolation::NegativeDensity(d) => {
                write!(f, "density_per_km must be non-negative, got {d}")
            }
            ParamViolation::NegativeSpeed(v) => {
                write!(f, "speed magnitudes must be non-negative, got {v}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario parameters: {}", format_violations(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("ES spacing must be strictly positive")]
    NonPositiveSpacing,

    #[error("unknown server id {0}")]
    UnknownServer(usize),

    #[error("topology label array has {labels} entries but the layout has {servers} servers")]
    LabelCountMismatch { labels: usize, servers: usize },

    #[error("contact window start {start} s lies outside [0, {budget}] s")]
    InvalidWindow { start: f64, budget: f64 },

    #[error("ES spacing {spacing} m is below the transmission range {range} m")]
    SpacingBelowRange { spacing: f64, range: f64 },

    #[error("delta must be strictly positive")]
    NonPositiveDelta,

    #[error("connectivity target {0} is unreachable even at the densest placement")]
    UnreachableTarget(f64),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("bad value for key `{key}` on line {line}: {message}")]
    TypeError {
        key: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

fn format_violations(violations: &[ParamViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
