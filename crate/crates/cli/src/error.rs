use rio_core::RioError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Refused(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Refused(_) => 4,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<RioError> for CliError {
    fn from(e: RioError) -> Self {
        match e {
            RioError::Parse(_) | RioError::InvalidParameter(_) => CliError::Parse(e.to_string()),
            RioError::UnsupportedAssociate(_) => CliError::Unsupported(e.to_string()),
            RioError::Refused(_) => CliError::Refused(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}
