use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action values")]
    InvalidActionValues,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("state violates invariants")]
    IllegalState,

    #[error("unknown state id {0}")]
    UnknownState(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("empty sample")]
    EmptySample,

    #[error("run logs have mismatched lengths ({expected} vs {found})")]
    MismatchedLengths { expected: usize, found: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
