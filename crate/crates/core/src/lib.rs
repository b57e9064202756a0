//! Resource allocation for secure simultaneous wireless information and power
//! transfer (SWIPT) in distributed-antenna networks with capacity-limited
//! backhaul and shared renewable energy.
//!
//! The crate models a cluster of remote radio heads (RRHs) driven by a central
//! processor. Beamforming matrices, an artificial-noise covariance, per-source
//! energy supplies and binary RRH/receiver selections are chosen to minimize
//! total transmit power subject to per-receiver SINR targets, worst-case
//! eavesdropper SINR caps, worst-case harvested-power floors under ellipsoidal
//! channel uncertainty, per-link backhaul caps and a lossy micro-grid power
//! balance.
//!
//! Two solvers are provided:
//!
//! * [`gbd`] — generalized Benders decomposition over the binary selections,
//!   alternating a fixed-selection semidefinite primal with a cut-accumulating
//!   mixed-integer master. Globally optimal.
//! * [`sca`] — a penalized successive convex approximation that relaxes the
//!   binaries to `[0,1]` and drives them back to binary values. Polynomial
//!   time, close to optimal in practice.
//!
//! Every robustness claim can be re-checked against [`robust::worst_case_quadratic`],
//! an exact trust-region oracle that is independent of the conic solve path.

pub mod conic;
pub mod error;
pub mod gbd;
pub mod linalg;
pub mod model;
pub mod robust;
pub mod sca;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{BeamVectors, Policy, Scenario, SelectionMatrix};

// re-exported so downstream crates share one linear-algebra stack
pub use nalgebra;
pub use num_complex;
