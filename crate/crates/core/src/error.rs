use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RioError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("associate space not supported: {0}")]
    UnsupportedAssociate(String),
    #[error("function is not nonincreasing at cell {0}")]
    NotDecreasing(usize),
    #[error("grids differ")]
    GridMismatch,
    #[error("refused: {0}")]
    Refused(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for RioError {
    fn from(e: std::io::Error) -> Self {
        RioError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RioError>;
