use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch { expected: usize, got: usize, context: &'static str },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("projected gradient vanishes: stationary point on the manifold")]
    Stationary,

    #[error("wrong regime: expected {expected}, found {found}")]
    WrongRegime { expected: &'static str, found: String },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
