use std::path::{Path, PathBuf};

use pbit_forge_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Capacity(String),
    /// No trial reached the optimum, or the instance has no solution.
    #[error("{0}")]
    CampaignFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 validation, 2 capacity, 3 campaign failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Capacity(_) | Self::Core(CoreError::Capacity { .. }) => 2,
            Self::CampaignFailed(_) => 3,
            _ => 1,
        }
    }
}
