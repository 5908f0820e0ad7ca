use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AsusError>;

#[derive(Debug, Error)]
pub enum AsusError {
    #[error(transparent)]
    Core(#[from] asus_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<AsusError>,
    },
    #[error("{0}")]
    Usage(String),
}
