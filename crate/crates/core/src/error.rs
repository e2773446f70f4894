use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid neuron parameters: {0}")]
    InvalidParams(String),

    #[error("weight {value} at index {index} is outside the signed 4-bit range -8..=7")]
    WeightOutOfRange { index: usize, value: i32 },

    #[error("source row {source_row} out of range ({rows} rows)")]
    SourceOutOfRange { source_row: usize, rows: usize },

    #[error("external event #{event} targets neuron {addr}, but only {limit} addresses exist")]
    EventAddress {
        event: usize,
        addr: usize,
        limit: usize,
    },

    #[error("external event #{event} value {value} does not fit in a signed byte")]
    EventValue { event: usize, value: i32 },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("chop rejected: {0}")]
    Chop(String),

    #[error("unknown cycle model {0:?}")]
    UnknownCycleModel(String),

    #[error("weight image: {0}")]
    WeightImage(String),

    #[error("weight image checksum mismatch: expected {expected}, found {found}")]
    Checksum { expected: String, found: String },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("no decision: {0}")]
    NoDecision(String),

    #[error("invalid puzzle: {0}")]
    Puzzle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::WeightOutOfRange { .. } => "weight_range",
            Error::SourceOutOfRange { .. } => "source_range",
            Error::EventAddress { .. } | Error::EventValue { .. } => "event",
            Error::Config { .. } => "config",
            Error::Chop(_) => "chop",
            Error::UnknownCycleModel(_) => "cycle_model",
            Error::WeightImage(_) => "weight_image",
            Error::Checksum { .. } => "checksum",
            Error::Parse { .. } => "parse",
            Error::NoDecision(_) => "no_decision",
            Error::Puzzle(_) => "puzzle",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
