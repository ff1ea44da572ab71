use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation library and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("integration diverged at t = {time}: {reason}")]
    IntegrationDiverged { time: f64, reason: String },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("trajectory has no filtered-payoff state (model {0})")]
    MissingFilteredPayoff(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incomplete scan in {dir}: missing {missing:?}")]
    IncompleteScan { dir: PathBuf, missing: Vec<String> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
