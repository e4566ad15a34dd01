use thiserror::Error;

/// Errors produced by graph construction, spectral routines, dynamics and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node index {index} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node {node} has zero {kind}-degree")]
    ZeroDegree { node: usize, kind: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dims(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
