use thiserror::Error;

/// Errors of the experiment runner. Each maps to exit code 1 except strict
/// validation failures, which map to 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(String),
    #[error("hypotheses not satisfied: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(vmfb_core::Error),
}

impl From<vmfb_core::Error> for CliError {
    fn from(e: vmfb_core::Error) -> Self {
        match e {
            vmfb_core::Error::ValidationFailed(msg) => CliError::Validation(msg),
            other => CliError::Core(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}
