use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An internal index (grid membership, core forest) no longer matches
    /// the state it describes.
    #[error("index corruption: {0}")]
    IndexCorruption(String),

    #[error("grid would address {cells} cells, above the cap of {cap}")]
    GridCapExceeded { cells: u128, cap: u64 },

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
