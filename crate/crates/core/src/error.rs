use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-generic input: {0}")]
    NonGeneric(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("realization error: {0}")]
    Realization(String),
    #[error("labeling error: {0}")]
    Labeling(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
