use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An index fell outside the bounds of the object it addresses.
    #[error("index out of bounds: {what} ({index}) must be < {bound}")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    /// A clamp-set member does not address a component of the worldline.
    #[error("clamp member (node {node}, week {week}) outside worldline of {nodes} nodes x {weeks} weeks")]
    ClampOutOfBounds {
        node: usize,
        week: usize,
        nodes: usize,
        weeks: usize,
    },

    /// An input violated a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// An experiment configuration is invalid. `field` names the offending key.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to encode {what}: {reason}")]
    Encode { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors that stem from a bad experiment configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
