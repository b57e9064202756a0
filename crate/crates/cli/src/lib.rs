//! Batch experiment runner and reference baselines for the secure-SWIPT
//! resource allocation library.
//!
//! Runs the standard experiment sweeps at desk scale: convergence ledgers,
//! transmit power and harvested power against the antenna count and the
//! channel-estimation error, with the decomposition solver, the
//! convex-approximation solver and three baselines (full cooperation, full
//! cooperation without energy sharing, co-located antennas). Every emitted
//! policy is re-verified against the exact worst-case oracle before anything
//! is written to disk.

pub mod baselines;
pub mod config;
pub mod experiments;

pub use baselines::{
    baseline_colocated, baseline_full_cooperation, baseline_no_energy_share, BaselineOutcome,
};
pub use config::{Algorithm, ExperimentKind, ExperimentSpec, RunConfig};
pub use experiments::{run_experiment, ExperimentReport};
