//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by measures, solvers, models and data handling.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller handed us something malformed: wrong shape, empty input,
    /// non-finite value, weights off the simplex, and so on.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative routine failed to converge within its budget.
    #[error("did not converge: {0}")]
    NotConverged(String),

    /// The optimization produced a non-finite objective.
    #[error("diverged at iteration {iteration}: objective is not finite")]
    Diverged { iteration: usize },

    /// Parse failure with file/line context.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Configuration problem; the message names the offending key.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A bug on our side: an invariant the library maintains was broken.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
