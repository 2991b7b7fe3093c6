use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants fall into three coarse classes used by the CLI for its exit
/// code: configuration problems, data problems and numeric failures. See
/// [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("schema violation in feature `{feature}`: {detail}")]
    SchemaViolation { feature: String, detail: String },

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("unknown arm `{0}`")]
    UnknownArm(String),

    #[error("numeric overflow at record {position}: {detail}")]
    NumericOverflow { position: u64, detail: String },

    #[error("{}: line {line}: {detail}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("record {position}: {source}")]
    AtRecord {
        position: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::NumericOverflow { .. } => ErrorClass::Numeric,
            Error::AtRecord { source, .. } => source.class(),
            Error::Arity(_)
            | Error::SchemaViolation { .. }
            | Error::InvalidTarget(_)
            | Error::UnknownArm(_)
            | Error::Parse { .. }
            | Error::UndefinedMetric(_)
            | Error::Io { .. } => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }

    /// Attaches a stream position. Numeric errors carry it inline; other
    /// errors are wrapped once.
    pub(crate) fn at_position(self, position: u64) -> Self {
        match self {
            Error::NumericOverflow { detail, .. } => Error::NumericOverflow { position, detail },
            e @ Error::AtRecord { .. } => e,
            other => Error::AtRecord {
                position,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
