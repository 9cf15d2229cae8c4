use thiserror::Error;

/// Everything that can go wrong while building or evaluating codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("enumeration of {needed} items exceeds the cap of {cap} (set TASKCODE_MAX_TUPLES to raise it)")]
    CapExceeded { needed: u128, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("optimizer stagnated; best value found {best}")]
    Stagnation { best: f64 },

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numeric routine, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::NonConvergence { .. }
                | Error::Stagnation { .. }
                | Error::CapExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
