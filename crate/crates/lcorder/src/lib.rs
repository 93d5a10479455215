//! # lcorder
//!
//! Discrete probability distributions on the non-negative integers under the
//! relative log-concavity pre-order, with entropy and divergence computations
//! that carry certified truncation-error bounds, and executable checks for a
//! family of entropy comparison and approximation-optimality inequalities.
//! A parallel grid-based layer covers weighted gamma sums on (0, ∞).
//!
//! | Module | Provides |
//! |--------|----------|
//! | [`pmf`] | truncated pmfs, standard families, convolution, tilting, instance generators |
//! | [`lc`] | the ≤_lc order, ultra-log-concavity, sign profiles |
//! | [`divergence`] | entropy, relative entropy, total variation, the binomial TV bound |
//! | [`inequalities`] | tolerance-aware verdicts for the theorem-level inequalities |
//! | [`suites`] | seeded, reproducible verification suites over random instances |
//! | [`continuous`] | grid pdfs, differential entropy, continuous order and gamma checks |
//!
//! Every value that a truncation can distort travels with an explicit error
//! bound, and every inequality check returns holds / violated / inconclusive
//! rather than a bare boolean: a statement is only *violated* when it fails
//! beyond the accumulated error.

use thiserror::Error as ThisError;

pub mod continuous;
pub mod divergence;
pub mod inequalities;
pub mod lc;
pub mod numeric;
pub mod pmf;
pub mod suites;

pub use divergence::DivergenceValue;
pub use inequalities::{Tolerances, Verdict, VerdictStatus};
pub use lc::LcReport;
pub use pmf::{DistSpec, FamilySpec, Pmf};

/// Error type for construction and precondition failures. Inequality
/// failures are verdicts, not errors.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("target mean {target} outside the open support hull ({lo}, {hi})")]
    MeanOutOfHull { target: f64, lo: f64, hi: f64 },

    #[error("tilt solver did not converge (residual {residual})")]
    TiltDidNotConverge { residual: f64 },

    #[error("weight table is not concave at index {index}")]
    NonConcaveWeights { index: usize },

    #[error("weight table too short: need {needed} entries, got {got}")]
    WeightTableTooShort { needed: usize, got: usize },

    #[error("invalid grid pdf: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
