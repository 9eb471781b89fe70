use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("reference reconstruction failed for coding rate {rate}: {reason}")]
    ReconstructionFailed { rate: String, reason: String },

    /// Receivers that cannot be given a positive rate.
    #[error("degenerate receivers (no decodable rate): {}", ids.join(", "))]
    DegenerateReceiver { ids: Vec<String> },

    #[error("too many receivers for exhaustive grouping: {n} > {max}")]
    Size { n: usize, max: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
