use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A mechanical derivation produced something the formalism forbids.
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// Numeric evaluation failed (missing assignment, singular denominator).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    /// The numeric oracle could not certify its own quadrature.
    #[error("oracle diagnostic: {0}")]
    Oracle(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn evaluation(msg: impl Into<String>) -> Self {
        Error::Evaluation(msg.into())
    }
}
