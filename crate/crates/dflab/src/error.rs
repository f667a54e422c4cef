use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Config does not match the schema; exits with status 2.
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Core(#[from] dflab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    pub fn schema(path: impl Into<String>, message: impl ToString) -> Self {
        HarnessError::Schema { path: path.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Schema { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
