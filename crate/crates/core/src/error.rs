//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by kernels, ensembles, and optimizers.
#[derive(Error, Debug, Clone)]
pub enum Error {
    /// A matrix required to be (strictly) positive definite failed the check,
    /// even after ridge regularization where that is allowed.
    #[error("singular matrix in {context}")]
    SingularMatrix { context: &'static str },

    /// Operand dimensions are inconsistent.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A requested factor rank exceeds the numeric rank of the matrix.
    #[error("requested rank {requested} exceeds numeric rank {numeric}")]
    RankDeficient { requested: usize, numeric: usize },

    /// A row update of the surrogate minimizer increased the objective;
    /// this signals a kernel bug, not a data problem.
    #[error("surrogate increased by {increase} across a row update (limit {limit})")]
    NonDecreasingSurrogate { increase: f64, limit: f64 },

    /// Bisection for a Lagrange multiplier could not bracket the target
    /// power inside the search interval; the caller should restart.
    #[error("no bracket for {multiplier} in [{lo}, {hi}]: transmitted power unreachable")]
    NoBracket {
        multiplier: &'static str,
        lo: f64,
        hi: f64,
    },

    /// Invalid model parameters (non-positive variance, bad correlation, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A per-sample functional failed; carries the offending sample index.
    #[error("evaluation failed at sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_sample(index: usize, source: Error) -> Self {
        Error::AtSample {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
