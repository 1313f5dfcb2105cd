//! Error types shared by every module of the crate.
//!
//! Each failure mode the public operations can report maps onto one variant,
//! so callers can match on the category (dimension vs. parameter vs. format,
//! and so on) without parsing message strings.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands (or an operand and a stored shape) disagree in extent.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    /// A mode index fell outside `1..=N`.
    #[error("mode {mode} out of range for a {ndim}-way tensor")]
    Mode { mode: usize, ndim: usize },

    /// A scalar parameter violated its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An input value fell outside the operation's domain.
    #[error("domain error: {reason}")]
    Domain { reason: String },

    /// A numerical procedure failed (non-convergence, non-finite values).
    #[error("numerical error: {reason}")]
    Numerical { reason: String },

    /// A file did not conform to its binary or text format.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    /// A problem specification is internally inconsistent.
    #[error("invalid problem spec: {reason}")]
    Spec { reason: String },

    /// A metric is undefined for the given inputs.
    #[error("metric undefined: {reason}")]
    Metric { reason: String },

    /// An underlying I/O operation failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dimension(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Dimension { expected: expected.into(), got: got.into() }
    }

    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }

    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::Domain { reason: reason.into() }
    }

    pub(crate) fn numerical(reason: impl Into<String>) -> Self {
        Error::Numerical { reason: reason.into() }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format { offset, reason: reason.into() }
    }

    pub(crate) fn spec(reason: impl Into<String>) -> Self {
        Error::Spec { reason: reason.into() }
    }

    pub(crate) fn metric(reason: impl Into<String>) -> Self {
        Error::Metric { reason: reason.into() }
    }
}
