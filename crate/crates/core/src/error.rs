use std::path::PathBuf;

/// Errors produced by the graphmetric pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("problem too large for dense solve: n = {n} exceeds cap {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("training diverged at epoch {epoch} (grad_norm = {grad_norm})")]
    Diverged { epoch: usize, grad_norm: f64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("gradient check failed: {0}")]
    GradCheck(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (divergence, failed gradient check)
    /// as opposed to bad inputs or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::GradCheck(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
