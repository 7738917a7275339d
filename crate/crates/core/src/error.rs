use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A user-supplied map produced a non-finite value or failed to evaluate.
    #[error("evaluation failed at node {node} (t = {t}): {reason}")]
    Evaluation { node: usize, t: f64, reason: String },

    /// Numerical inversion of a componentwise map did not converge.
    #[error("inversion failed for value {value}: {reason}")]
    Inversion { value: f64, reason: String },

    #[error("parse error at offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
