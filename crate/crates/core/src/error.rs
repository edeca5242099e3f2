use thiserror::Error;

/// Errors raised by the simulation and analysis pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent or unsupported configuration (grids, gates, parameters).
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical self-check failed (non-finite values, violated identities).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Malformed input data.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Input data that parses but cannot be analyzed.
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;

impl Error {
    /// Prefixes the message, keeping the variant.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{what}: {m}")),
            Error::Config(m) => Error::Config(format!("{what}: {m}")),
            Error::Numeric(m) => Error::Numeric(format!("{what}: {m}")),
            Error::Parse { line, message } => Error::Parse { line, message: format!("{what}: {message}") },
            Error::Data(m) => Error::Data(format!("{what}: {m}")),
            Error::Io(m) => Error::Io(format!("{what}: {m}")),
        }
    }
}
