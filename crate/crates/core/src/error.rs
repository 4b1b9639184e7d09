use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector has zero norm")]
    ZeroState,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
