use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate return vector: <r, p> = {0}")]
    DegenerateReturn(f64),

    #[error("parameter error: {0}")]
    Param(String),

    #[error("matrix is not positive definite after jitter escalation")]
    SingularMatrix,

    #[error("no convergence after {iterations} iterations (last decrement {decrement:e})")]
    NoConvergence { iterations: usize, decrement: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("expert key sets differ")]
    KeyMismatch,

    #[error("expert {key}: {source}")]
    Expert {
        key: String,
        #[source]
        source: Box<Error>,
    },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::Round {
            round,
            source: Box::new(self),
        }
    }

    /// Whether this error (or the one it wraps) signals a broken invariant.
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            Error::InvariantViolation(_) => true,
            Error::Expert { source, .. } | Error::Round { source, .. } => {
                source.is_invariant_violation()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
