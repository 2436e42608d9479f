//! Error type shared by every engine in the crate.

use std::io;

use thiserror::Error;

/// Coarse error class, used by front ends to pick exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Validation,
    NotFound,
    Numerical,
    Usage,
    Io,
}

impl ErrorKind {
    /// Stable machine-readable code.
    pub fn code(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::NotFound => "not_found",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Usage => "usage",
            ErrorKind::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("referential integrity: {0}")]
    Referential(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("domain violation for {family}: {message}")]
    Domain { family: String, message: String },

    #[error("rank-deficient design at column {column}: {advice}")]
    RankDeficient { column: String, advice: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no applicable model: {0}")]
    NoModel(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("storage failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("corrupt store file {path} line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation { .. }
            | Error::Referential(_)
            | Error::InsufficientData(_)
            | Error::UnsupportedDesign(_)
            | Error::Capacity(_)
            | Error::Domain { .. } => ErrorKind::Validation,
            Error::NotFound(_) => ErrorKind::NotFound,
            Error::RankDeficient { .. } | Error::Numerical(_) | Error::NoModel(_) => {
                ErrorKind::Numerical
            }
            Error::Usage(_) => ErrorKind::Usage,
            Error::Io { .. } | Error::Corrupt { .. } => ErrorKind::Io,
        }
    }

    /// Fine-grained code, finer than [`ErrorKind::code`].
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Referential(_) => "referential_integrity",
            Error::NotFound(_) => "not_found",
            Error::InsufficientData(_) => "insufficient_data",
            Error::UnsupportedDesign(_) => "unsupported_design",
            Error::Capacity(_) => "capacity",
            Error::Domain { .. } => "domain",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Numerical(_) => "numerical",
            Error::NoModel(_) => "no_model",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Corrupt { .. } => "corrupt_store",
        }
    }

    /// Field name for validation errors, when one applies.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Validation { field, .. } => Some(field),
            Error::RankDeficient { column, .. } => Some(column),
            _ => None,
        }
    }
}
