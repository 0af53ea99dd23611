use std::path::PathBuf;

use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),

    #[error("invalid bid grid: {0}")]
    Grid(String),

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("invalid player auction: {0}")]
    PlayerAuction(String),

    #[error("invalid solver config: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("bid index {index} out of range for a grid of {len} points")]
    BidIndex { index: usize, len: usize },

    #[error("agent {0} out of range")]
    Agent(usize),

    #[error("enumeration would visit {terms} terms, above the limit of {limit}")]
    EnumerationTooLarge { terms: u128, limit: u128 },

    #[error("reference CDF is not monotone at grid index {0}")]
    NonMonotoneReference(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
