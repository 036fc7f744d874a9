//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

/// Errors produced by dataset construction, loss evaluation, theory checks,
/// training, and the command-line front end.
#[derive(Error, Debug)]
pub enum Error {
    /// Invalid configuration: bad dimensions, fractions, unknown config keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside an operation's domain (zero vector for cosine,
    /// asymmetric distance matrix, wrong label dimension, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values where finite numbers are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Two-view batches need at least two source samples.
    #[error("batch size error: {0}")]
    BatchSize(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}: {message}")]
    Training { step: usize, message: String },

    /// A verification suite (theory bounds, gradient check) failed.
    #[error("verification failure: {0}")]
    Verification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 verification, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Verification(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
