use spdgeom::SpdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(#[source] SpdError),

    #[error("{failed} of {total} properties failed")]
    SuiteFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::SuiteFailed { .. } => 3,
        }
    }

    pub(crate) fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SpdError> for CliError {
    fn from(e: SpdError) -> Self {
        CliError::Numerical(e)
    }
}
