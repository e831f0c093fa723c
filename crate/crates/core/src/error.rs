use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("insufficient history: need T >= {needed}, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("estimator diverged: {0}")]
    Diverged(String),

    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
