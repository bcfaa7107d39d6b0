use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("empty graph: {0}")]
    EmptyGraph(String),

    #[error("empty bag: {0}")]
    EmptyBag(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate projection vector (zero norm)")]
    DegenerateProjection,

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("AUC undefined: {0}")]
    AucUndefined(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }
}
