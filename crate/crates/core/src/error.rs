use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("incompatible operands: {0}")]
    InvalidPair(String),

    #[error("integer overflow while computing {0}")]
    Overflow(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("numeric failure in {context}: {message}")]
    Numeric { context: String, message: String },

    #[error("outside the domain of {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for errors that originate in arithmetic rather than in user input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric { .. } | Error::Overflow(_) | Error::Consistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
