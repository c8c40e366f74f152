//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building problems, simulating, or
/// post-processing.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is structurally wrong (dimension mismatch,
    /// non-positive temperature, unknown builtin, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An analytically supplied derivative disagrees with its
    /// finite-difference probe at construction time.
    #[error(
        "field `{field}` fails its finite-difference probe at {point:?}: \
         analytic {analytic:.6e}, probe {probe:.6e}, tolerance {tolerance:.3e}"
    )]
    FieldProbe { field: &'static str, point: Vec<f64>, analytic: f64, probe: f64, tolerance: f64 },

    /// A runtime argument violates an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A jump was requested from a state with zero total transition rate.
    #[error("total jump rate is zero; the chain cannot move")]
    ZeroTotalRate,

    /// An iterative solver ran out of its iteration budget.
    #[error("solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NumericalFailure { iterations: usize, residual: f64 },

    /// The operation is only implemented up to a dimension limit.
    #[error("dimension {dim} is not supported here (limit {limit})")]
    UnsupportedDimension { dim: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    /// A data file (CSV trajectory, sample list) could not be parsed.
    #[error("malformed data in {path}: {reason}")]
    Parse { path: String, reason: String },
}
