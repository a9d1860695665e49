use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(
        "cholesky factorization failed for {size}x{size} matrix after jitter {max_jitter:e} \
         (pivot {pivot_index} = {pivot:e}, diagonal range [{min_diag:e}, {max_diag:e}])"
    )]
    Cholesky {
        size: usize,
        pivot_index: usize,
        pivot: f64,
        max_jitter: f64,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("hyperparameter fit diverged on all {restarts} restarts (best objective {best_objective})")]
    FitDiverged {
        restarts: usize,
        best_objective: f64,
        /// Raw (log-space) free parameters of the best finite restart, if any.
        best_raw: Option<Vec<f64>>,
    },

    #[error("acquisition is degenerate: posterior variance is zero at every candidate")]
    DegenerateAcquisition,

    #[error("objective evaluation failed: {0}")]
    Objective(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
