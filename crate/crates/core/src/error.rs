use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("edge limit exceeded: generation produced more than {limit} edges")]
    EdgeLimit { limit: u64 },

    #[error("graph has {n} vertices, brute-force peeling is limited to {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("malformed graph file: {0}")]
    Format(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
