//! Error types shared across the engine.

use thiserror::Error;

/// All fallible operations in this crate return `Result<T, Error>`.
#[derive(Error, Debug)]
pub enum Error {
    /// The profile document could not be parsed against the schema.
    #[error("parse error: {0}")]
    Parse(String),

    /// One or more instance invariants do not hold. Every failure is listed.
    #[error("validation error: {}", .failures.join("; "))]
    Validation { failures: Vec<String> },

    /// A caller passed an argument outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// No schedule satisfies the resource bound. Carries the minimum
    /// resource value any schedule can achieve, so callers can report
    /// how far the bound is from feasible.
    #[error("infeasible: minimum achievable resource is {min_achievable_resource}")]
    Infeasible { min_achievable_resource: f64 },

    /// The link is flagged offline and cannot carry traffic.
    #[error("link '{0}' is offline")]
    UnavailableLink(String),

    /// Graph shape the engine does not handle (overlapping residual blocks etc).
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    /// Two internal routes that must agree (path cost vs re-evaluation,
    /// schedule vs exported ILP) disagree beyond tolerance.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    /// Lookup query outside the table's bounding box, or unknown axis value.
    #[error("range error: {0}")]
    Range(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation {
            failures: vec![msg.into()],
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
