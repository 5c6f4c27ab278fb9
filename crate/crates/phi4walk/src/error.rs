//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be balanced is not.
    #[error("matrix is not balanced: row sums {rows:?} differ from column sums {cols:?}")]
    NotBalanced { rows: Vec<u32>, cols: Vec<u32> },

    /// A combinatorial enumeration or brute-force sweep would exceed its budget.
    #[error("budget exceeded for {what}: attempted {attempted}, limit {limit}")]
    Budget {
        what: &'static str,
        attempted: u64,
        limit: u64,
    },

    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    /// Malformed JSON input.
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
