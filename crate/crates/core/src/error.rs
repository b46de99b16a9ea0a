use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScdtError>;

#[derive(Debug, Error)]
pub enum ScdtError {
    /// Malformed input data. `index` points at the first offending sample when known.
    #[error("invalid input: {message}{}", index.map(|i| format!(" (at index {i})")).unwrap_or_default())]
    Validation {
        message: String,
        index: Option<usize>,
    },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty distribution: input has zero mass")]
    EmptyDistribution,

    #[error("atomic pushforward unsupported: transport map is constant")]
    AtomicPushforward,

    #[error("reference mismatch: expected {expected}, found {found}")]
    ReferenceMismatch { expected: String, found: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u64, expected: u64 },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl ScdtError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ScdtError::Validation {
            message: message.into(),
            index: None,
        }
    }

    pub(crate) fn invalid_at(message: impl Into<String>, index: usize) -> Self {
        ScdtError::Validation {
            message: message.into(),
            index: Some(index),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ScdtError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, ScdtError::Io { .. })
    }
}
