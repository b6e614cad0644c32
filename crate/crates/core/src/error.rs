use std::io;

use thiserror::Error;

use crate::time::SimTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot schedule an event at {at}s, clock is already at {now}s")]
    ScheduleInPast { at: SimTime, now: SimTime },

    #[error(transparent)]
    TraceParse(#[from] TraceParseError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("trace output failed: {0}")]
    TraceOutput(#[source] io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// A malformed line in a trace or counts file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("connection ratio needs at least one node")]
    ZeroNodes,

    #[error("missing rows for pause times {0:?}")]
    MissingPauseRows(Vec<u32>),

    #[error("unexpected pause time {0} (expected 10..=100 in steps of 10)")]
    UnexpectedPause(u32),

    #[error("duplicate row for pause time {0}")]
    DuplicatePause(u32),

    #[error("no input: {0}")]
    Empty(String),
}
