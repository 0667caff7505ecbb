use thiserror::Error;

use pvaudit::Error as CoreError;

/// Process-level failures. Data verdicts are never errors.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("no records in {0}")]
    NoRecords(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Schema(_) => 3,
            CliError::NoRecords(_) => 4,
            CliError::Data(_) => 5,
            CliError::Io(_) => 6,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::MissingColumn(_) | CoreError::Format(_) => CliError::Schema(e.to_string()),
            CoreError::Parse { .. } => CliError::Data(e.to_string()),
            CoreError::Domain(_) | CoreError::Config(_) | CoreError::Overflow(_) => {
                CliError::Usage(e.to_string())
            }
            CoreError::State(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
