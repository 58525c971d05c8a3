use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("no pair produced a defined Dice score")]
    EmptySample,

    #[error("not enough samples: {what} needs at least {needed}, got {got}")]
    SampleSize {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("dataset error at {entry}: {reason}")]
    Dataset { entry: String, reason: String },

    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dataset(entry: impl std::fmt::Display, reason: impl std::fmt::Display) -> Self {
        Error::Dataset {
            entry: entry.to_string(),
            reason: reason.to_string(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Argument(_) | Error::Config { .. } => ErrorClass::Usage,
            Error::Numerical(_) | Error::Fit(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
