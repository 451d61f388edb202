//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem in user-supplied data (dimension mismatches,
    /// invalid sparsity patterns, missing options).
    #[error("modeling error: {0}")]
    Modeling(String),

    /// Relaxation order below the minimum feasible for the program.
    #[error("order {requested} below minimum feasible order {minimum}")]
    OrderTooLow { requested: usize, minimum: usize },

    /// Problem-file syntax error with source position.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// I/O failure while reading or writing problem/solution files.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// External solver invocation failed or produced unreadable output.
    #[error("external solver: {0}")]
    ExternalSolver(String),
}

impl Error {
    pub fn modeling(msg: impl Into<String>) -> Self {
        Error::Modeling(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
