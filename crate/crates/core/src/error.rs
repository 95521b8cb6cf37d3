use std::path::PathBuf;

use rbp_autodiff::AdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AdError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("pattern {pattern} needs at least {needed} distinct tokens, got {got}")]
    VocabularyTooSmall {
        pattern: String,
        needed: usize,
        got: usize,
    },
    #[error("cannot balance classes: {0}")]
    Infeasible(String),
    #[error("non-finite loss at epoch {epoch} (learning rate {lr})")]
    NonFiniteLoss { epoch: usize, lr: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
