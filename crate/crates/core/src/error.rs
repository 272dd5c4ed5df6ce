use thiserror::Error;

/// Errors produced by planning, sampling and release operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Corollary-6-style proviso failure: the requested confidence cannot be
    /// met with the given sample budget. Carries the minimal feasible gamma.
    #[error("infeasible plan: m = {m} supports gamma >= {min_gamma}, requested {gamma}")]
    InfeasiblePlan { m: u64, gamma: f64, min_gamma: f64 },

    #[error(
        "degenerate sensitivity: estimated delta is zero, so the noise scale would be zero; \
         increase k or m, use the max statistic, or opt in to a flagged unnoised release"
    )]
    DegenerateSensitivity,

    #[error("order statistic index {k} out of range 1..={m}")]
    IndexOutOfRange { k: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target evaluation failed at iteration {iteration}: {source}")]
    Eval {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite sensitivity measurement at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
