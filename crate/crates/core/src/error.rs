use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A quantity that has no defined value for the given input, such as the
/// accuracy of an empty confusion matrix or the correlation of a constant
/// series.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{quantity} is undefined: {reason}")]
pub struct Undefined {
    pub quantity: &'static str,
    pub reason: &'static str,
}

impl Undefined {
    pub(crate) fn new(quantity: &'static str, reason: &'static str) -> Self {
        Self { quantity, reason }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("missing artifact {} (run the `{stage}` stage first)", path.display())]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error(transparent)]
    Undefined(#[from] Undefined),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the command-line front end: 1 usage/config,
    /// 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Data(_) | Error::Shape(_) | Error::MissingArtifact { .. } => 2,
            Error::Numeric(_) | Error::Undefined(_) => 3,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Data(err.to_string())
    }
}
