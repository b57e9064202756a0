//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by scenario construction, program building and the solvers.
///
/// Constraint *violations* are never errors: checkers return slack reports so
/// that tolerance policy stays with the caller.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("time slot {slot} outside profile range 1..={len}")]
    SlotOutOfRange { slot: usize, len: usize },

    #[error("conic solve failed: {0}")]
    NumericalFailure(String),

    #[error("problem instance is infeasible: {0}")]
    Infeasible(String),

    #[error("rank-one recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("missing dual certificate: {0}")]
    MissingDuals(&'static str),

    #[error("binary rounding could not be repaired to satisfy the backhaul caps: {0}")]
    RoundingRepairFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
