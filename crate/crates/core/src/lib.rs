//! Simulator and spacing optimizer for edge servers along a highway.
//!
//! The crate generates random vehicular traffic on a one-dimensional
//! highway, simulates time-bounded multi-hop message propagation among
//! moving vehicles and fixed edge servers (ESs), and searches for the
//! largest ES spacing that still delivers a message to a target fraction
//! of vehicles with a target probability, with Chernoff-calibrated trial
//! counts.

pub mod cli;
pub mod config;
pub mod error;
pub mod layout;
pub mod metrics;
pub mod optimizer;
pub mod oracle;
pub mod propagation;
pub mod scenario;
pub mod testkit;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use layout::{direct_neighbors, place_servers, ConnectionTopology, ServerLayout, SpacingSpec};
pub use metrics::{
    baseline_compare, connectivity_breakdown, sweep, ConnectivityBreakdown, SweepAxis,
};
pub use optimizer::{
    brute_force_fg, compute_h, compute_t, optimize_spacing, FgEstimate, OptimizerResult,
};
pub use propagation::{
    earliest_contact, event_r, reachable_set, simulate, simulate_nodes, ContactRule,
    DeliveryReport, DirectionalMode, Node,
};
pub use scenario::{
    generate_traffic, validate_params, Placement, Population, ScenarioParams, TrafficSnapshot,
    ValidatedParams,
};
