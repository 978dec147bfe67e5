//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error at line {line}: {msg}")]
    Ingest { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("task error: {0}")]
    Task(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for bad inputs, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingest { .. }
            | Error::Io(_)
            | Error::Config(_)
            | Error::Split(_)
            | Error::Checkpoint(_) => 1,
            Error::Shape(_)
            | Error::Sampling(_)
            | Error::Training(_)
            | Error::Task(_)
            | Error::Metric(_)
            | Error::Lookup(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
