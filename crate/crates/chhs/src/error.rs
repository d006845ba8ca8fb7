use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// config errors exit 2, blow-ups exit 3, IO failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("structural mismatch: {0}")]
    Mismatch(String),

    #[error("parity mismatch: {0}")]
    Parity(String),

    #[error("negative Sobolev order s = {0}")]
    NegativeOrder(f64),

    #[error("non-finite values produced in {stage}")]
    Overflow { stage: &'static str },

    #[error("solution blew up at step {step} (t = {time}): {what}")]
    BlowUp {
        step: usize,
        time: f64,
        what: String,
        /// Last accepted state before the blow-up, for post-mortem dumps.
        state: Box<crate::model::State>,
    },

    #[error(
        "time step underflow below dt_min = {dt_min} at t = {time}: \
         energy dissipation could not be enforced"
    )]
    DissipationFailure {
        time: f64,
        dt_min: f64,
        state: Box<crate::model::State>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive value at t = {0}: cannot fit a log-linear decay")]
    NonpositiveSeries(f64),

    #[error("config {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid initial condition: {0}")]
    InvalidIc(String),

    #[error("snapshot {path}: {msg}")]
    Snapshot { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::BlowUp { .. } => 3,
            Error::Io { .. } | Error::Snapshot { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
