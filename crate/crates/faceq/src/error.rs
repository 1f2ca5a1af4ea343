//! Crate-wide error type.
//!
//! Errors fall into three classes, each mapped to a distinct process exit
//! code by the CLI: I/O (3), validation (2), numeric (4).

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// File system failure: unreadable, unwritable, missing.
    Io { path: PathBuf, source: std::io::Error },
    /// Bad input: unsupported format, malformed file, violated precondition.
    Validation(String),
    /// Numerical failure: degenerate geometry, non-finite values.
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Prefix the message with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Io { path, source } => Error::Io { path, source },
            Error::Validation(m) => Error::Validation(format!("[{stage}] {m}")),
            Error::Numeric(m) => Error::Numeric(format!("[{stage}] {m}")),
        }
    }

    /// Process exit code for the CLI: one code per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Validation(_) => 2,
            Error::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
            Error::Validation(m) => write!(f, "validation error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
