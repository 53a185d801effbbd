use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{operation} is not supported for {set}")]
    Unsupported {
        operation: &'static str,
        set: String,
    },

    #[error("t = {t} exceeds the schedule horizon T = {horizon}")]
    ScheduleOverflow { t: usize, horizon: usize },

    #[error("{solver} exceeded its cap of {cap} iterations (last gap {last_gap:e}, tolerance {tolerance:e})")]
    IterationCap {
        solver: &'static str,
        cap: usize,
        last_gap: f64,
        tolerance: f64,
    },

    #[error("call accounting mismatch: {0}")]
    Accounting(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<S: Into<String>>(msg: S) -> Error {
    Error::InvalidInput(msg.into())
}
