use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A CSV/JSON row could not be turned into a record.
    #[error("row {row} (line {line}): field `{field}`: {message}")]
    Parse {
        row: usize,
        line: u64,
        field: String,
        message: String,
    },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("malformed input: {0}")]
    Format(String),

    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation needs state (derived statistics, ranks) that has not been computed.
    #[error("state error: {0}")]
    State(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
