use std::path::PathBuf;

/// Errors raised by the simulator, its inputs, and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed data that violates an operation's input contract.
    #[error("invalid input: {0}")]
    InputContract(String),

    /// A configuration value is missing or out of range.
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    /// Ranker entry points were called out of order.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InputContract(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
