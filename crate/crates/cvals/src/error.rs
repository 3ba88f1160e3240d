//! Error taxonomy shared by every module in the crate.
//!
//! The variants map one-to-one onto the failure classes callers need to
//! distinguish: bad shapes, bad values, conditioning on an impossible event,
//! iterative numerics giving up, and linear systems with no solution.

use thiserror::Error;

/// Unified error type for all library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands live on different spaces or have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input values violate a construction invariant (normalization,
    /// positivity, range, unknown name, unparsable parameter, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Conditioning on an event of probability zero; the update rule is
    /// undefined there and returning NaN would hide bugs.
    #[error("zero-probability conditioning: {0}")]
    ZeroProbability(String),

    /// An iterative numerical procedure failed to converge, or a problem is
    /// too ill-conditioned to solve at the requested tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A constrained linear system (for example a pinned solution family)
    /// admits no solution.
    #[error("no solution: {0}")]
    NoSolution(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn zero_prob(msg: impl Into<String>) -> Self {
        Error::ZeroProbability(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
