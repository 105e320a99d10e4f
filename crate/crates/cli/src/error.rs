use std::io;

use thiserror::Error;
use tpn::callcenter::CallCenterError;
use tpn::dynamics::DynamicsError;
use tpn::model::LoadError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or flags that do not apply to the chosen model.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] io::Error),
    /// The input was read but is invalid or the computation failed.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CallCenterError> for CliError {
    fn from(e: CallCenterError) -> Self {
        CliError::Domain(e.to_string())
    }
}
