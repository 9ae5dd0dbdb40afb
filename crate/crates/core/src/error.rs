use std::io;

use thiserror::Error;

/// Errors produced by dataset handling, model training/unlearning, and
/// the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Feature-dimension mismatch between a model and an input matrix.
    #[error("dimension mismatch: model expects {expected} feature columns, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A row id that is not (or no longer) part of a model's training set.
    #[error("unknown row id {0}")]
    UnknownRow(u64),

    /// The operation is not valid in the value's current state
    /// (e.g. predicting with a model whose training set was fully deleted).
    #[error("invalid state: {0}")]
    State(String),

    /// A CSV column mapping did not match the file's header.
    #[error("schema error: {0}")]
    Schema(String),

    /// A binary container or checkpoint could not be decoded.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// A results text log could not be parsed.
    #[error("log parse error at line {line}: {message}")]
    LogParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
