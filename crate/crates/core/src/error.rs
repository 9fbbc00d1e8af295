use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    Encoding { path: PathBuf, line: usize },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Mismatched shapes between inputs that must agree (line counts, lengths).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity error: requested {requested} synthetic pairs, achieved {achieved}")]
    Capacity { requested: usize, achieved: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Encoding { .. } => "encoding",
            Error::Parse { .. } => "parse",
            Error::Structural(_) => "structural",
            Error::Config(_) => "config",
            Error::Domain(_) => "domain",
            Error::Capacity { .. } => "capacity",
        }
    }
}
