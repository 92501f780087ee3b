use thiserror::Error;

/// Errors produced while building, fitting or evaluating models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("insufficient points: requested {requested}, only {available} available")]
    InsufficientPoints { requested: usize, available: usize },

    #[error("degenerate bandwidth: {0}")]
    DegenerateBandwidth(String),

    #[error("dimension mismatch: expected d = {expected}, got d = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("region {region}: {source}")]
    Region {
        region: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error originates in a linear solve or another numerical step,
    /// possibly nested inside a region error.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) | Error::DegenerateBandwidth(_) => true,
            Error::Region { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
