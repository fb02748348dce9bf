use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    Shape,
    Config,
    Parse,
    Integrity,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid quantization table: {0}")]
    InvalidTable(String),

    #[error("index out of range: {what} = {index}, valid range {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("empty sample set: {0}")]
    EmptySampleSet(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("{format} parse error: {msg}")]
    Parse { format: &'static str, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::TooFewSamples { .. } | Error::EmptySampleSet(_) => {
                ErrorKind::Domain
            }
            Error::Shape(_) | Error::OutOfRange { .. } => ErrorKind::Shape,
            Error::InvalidTable(_) | Error::DegenerateTraining(_) | Error::Config(_) => {
                ErrorKind::Config
            }
            Error::Integrity(_) => ErrorKind::Integrity,
            Error::Parse { .. } => ErrorKind::Parse,
            Error::Io { .. } | Error::Csv(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn parse(format: &'static str, msg: impl Into<String>) -> Self {
        Error::Parse {
            format,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
