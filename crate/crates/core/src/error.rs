use thiserror::Error;

/// Errors produced by the extraction and evaluation primitives.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
    #[error("degenerate face geometry: {0}")]
    DegenerateFace(String),
    #[error("Katz fractal dimension undefined for a constant series")]
    UndefinedKfd,
    #[error("no valid frames in sequence")]
    EmptyStack,
    #[error("signal shorter than one analysis window")]
    EmptySeries,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("alignment failed: {0}")]
    NoAlignment(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
