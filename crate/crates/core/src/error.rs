use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An enumeration ran past its budget. `best` carries the best value
    /// seen before stopping; it is only an upper bound for a minimum (or a
    /// lower bound for a maximum).
    #[error("budget exceeded in {what}: {examined} items examined (budget {budget})")]
    BudgetExceeded {
        what: String,
        examined: u64,
        budget: u64,
        best: Option<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("exact constant unavailable: {0}")]
    ModeUnavailable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
