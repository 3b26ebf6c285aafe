use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is out of range (bad node id, bad edge id, malformed table).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The input is well-formed but outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The operation requires a state the input is not in (e.g. converged LBP).
    #[error("invalid state: {0}")]
    State(String),

    #[error("inexact polynomial division: {0}")]
    Divisibility(String),

    /// A structural identity that must hold failed to hold.
    #[error("identity violated: {0}")]
    TheoremViolation(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
