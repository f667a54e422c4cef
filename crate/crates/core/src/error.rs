use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("atoms {0} and {1} share the same location; atomic measures must have distinct support points")]
    DuplicateLocation(usize, usize),

    #[error("operation not supported on {0}")]
    Unsupported(String),

    /// The drift part of the generator is an infinite sum for this function.
    #[error("generator undefined for test function {index}: weight profile does not vanish near 0")]
    UnboundedDrift { index: usize },

    #[error("weight sums differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
