use std::path::Path;

/// Command failures, grouped by exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Failure {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Divergence(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure::Io(format!("{}: {err}", path.display()))
    }
}

impl From<rnnjet_core::Error> for Failure {
    fn from(e: rnnjet_core::Error) -> Self {
        match e {
            rnnjet_core::Error::Divergence { .. } => Failure::Divergence(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
