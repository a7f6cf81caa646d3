use thiserror::Error;

/// Errors raised by the allocation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument was outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exact outage sum was asked for a block size it cannot evaluate stably.
    #[error("exact outage evaluation unstable for N = {n} (limit {limit}); use the closed-form model")]
    ExactTooLarge { n: u64, limit: u64 },

    /// MNRC vector violates the unequal-error-protection ordering.
    #[error("MNRC vector is not non-decreasing: {0:?}")]
    Unordered(Vec<f64>),

    /// A solver was started from a point that does not satisfy the constraints.
    #[error("initial point infeasible: {0}; initialize from the convex solution or EEP")]
    InfeasibleInit(String),

    /// The scenario or distribution description is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical routine failed to produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
