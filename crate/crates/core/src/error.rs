use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while reading models and data or predicting with them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("unsupported format version: {0:?}")]
    Version(String),

    #[error("instance {instance}: feature index {index} exceeds model dimension {dimension}")]
    Dimension {
        instance: usize,
        index: u32,
        dimension: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
