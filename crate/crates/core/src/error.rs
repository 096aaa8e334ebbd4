use thiserror::Error;

/// Errors raised across grid construction, circuit building, simulation and filtering.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("circuit construction error: {0}")]
    Construction(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate measurement update: {0}")]
    Degenerate(String),
    #[error("grid design error: {0}")]
    GridDesign(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
