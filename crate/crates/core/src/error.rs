use thiserror::Error;

/// Errors raised by the model, solver, learner and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The behavior chain has no unique stationary distribution
    /// (it must be irreducible and recurrent).
    #[error("ergodicity violated: {0}")]
    Ergodicity(String),

    /// The target policy takes an action the behavior policy never takes.
    #[error("coverage violated at state {state}, action {action}: target > 0 but behavior = 0")]
    Coverage { state: usize, action: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    /// The symmetric part of a key matrix is not positive definite.
    #[error("key matrix not positive definite: smallest symmetric eigenvalue {mu:e}")]
    NotPositiveDefinite { mu: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
