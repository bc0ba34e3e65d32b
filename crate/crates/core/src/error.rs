use std::path::PathBuf;

use crate::network::NeuronId;

pub type Result<T, E = GwrError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum GwrError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown neuron id {0}")]
    UnknownNeuron(NeuronId),

    #[error("invalid network state: {0}")]
    InvalidState(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}, line {line}: {message}", path = path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GwrError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        GwrError::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        GwrError::InvalidConfig(msg.into())
    }

    /// Validation failures map to exit code 2 on the command line; everything
    /// else is a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            GwrError::InvalidConfig(_)
                | GwrError::DimensionMismatch { .. }
                | GwrError::Contract(_)
                | GwrError::Parse { .. }
        )
    }
}
