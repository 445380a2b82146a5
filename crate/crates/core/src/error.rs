//! Error taxonomy shared by the whole crate.
//!
//! Recoverable failures are reported through [`Error`]; broken caller
//! contracts (dimension mismatches, invalid enum states) panic via
//! `assert!` at the offending call site.  Soft conditions that do not
//! invalidate a result (degenerate fractional-programming input, a stalled
//! manifold line search, a regularized WMMSE solve) are reported as flags
//! on the respective result types instead of errors.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input is structurally valid but degenerate for this operation
    /// (for example a rank-deficient channel handed to zero-forcing).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative numerical procedure failed to make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Bad configuration file or inconsistent parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure while reading configs or writing results.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
