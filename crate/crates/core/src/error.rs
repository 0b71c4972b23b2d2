use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An ill-formed network or configuration description.
    #[error("specification error: {0}")]
    Spec(String),
    /// Arguments with the wrong shape or an out-of-domain value.
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("simulation diverged: {0}")]
    SimulationDiverged(String),
    /// An operation invoked in a state where it is not allowed, e.g. stepping a finished episode.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("state error: {0}")]
    State(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to load {path}: {cause}")]
    Load { path: PathBuf, cause: LoadError },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Why a checkpoint or terrain file was rejected.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("parameter length mismatch for {what}: expected {expected}, found {found}")]
    Length {
        what: String,
        expected: usize,
        found: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(path: impl Into<PathBuf>, cause: LoadError) -> Self {
        Error::Load {
            path: path.into(),
            cause,
        }
    }
}
