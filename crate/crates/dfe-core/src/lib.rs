//! Direct fidelity estimation of small quantum systems.
//!
//! The crate provides the estimator stack end to end:
//! - [`pauli`]: Pauli words, bitstrings, characteristic vectors;
//! - [`state`]: dense density matrices (GHZ, W, Haar-random, depolarized);
//! - [`measurement`]: rotated projective measurement with seeded RNG streams;
//! - [`grouping`]: sorted-insertion grouping and the grouped baseline
//!   estimator with its shot-budget formulas;
//! - [`lp`]: a self-contained dense revised-simplex solver;
//! - [`oasis_gt`]: the LP-optimized importance sampler over the local Pauli
//!   POVM, for arbitrary targets;
//! - [`oasis_st`]: closed-form grouped estimators for GHZ and W targets with
//!   exact-moment oracles.

pub mod grouping;
pub mod lp;
pub mod matrix;
pub mod measurement;
pub mod oasis_gt;
pub mod oasis_st;
pub mod pauli;
pub mod state;

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit count {n} outside supported range {min}..={max}")]
    QubitCount { n: usize, min: usize, max: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("misaligned inputs: {0}")]
    MisalignedInput(String),
    #[error("not a density matrix: {0}")]
    InvalidDensity(String),
    #[error("grouping does not match target: measured group probabilities sum to {sum}")]
    GroupTargetMismatch { sum: f64 },
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("simplex iteration limit exceeded")]
    LpIterationLimit,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
