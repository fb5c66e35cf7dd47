use std::path::PathBuf;

use swnoc_core::{GenerationError, ModelError, TrafficError};
use swnoc_netsim::SimError;
use swnoc_reliability::{AgingError, SvlError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Aging(#[from] AgingError),
    #[error(transparent)]
    Svl(#[from] SvlError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    /// Process exit status: 2 for constraint or generation failures, 3 for a
    /// refused search space, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Generation(_) | HarnessError::Model(ModelError::Constraint(_)) => 2,
            HarnessError::Svl(SvlError::SearchSpaceTooLarge { .. }) => 3,
            _ => 1,
        }
    }
}
