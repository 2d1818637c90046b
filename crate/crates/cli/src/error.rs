use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 2,
    NumericFailure = 3,
    CertificateViolation = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] spinbell::Error),
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        use spinbell::Error as E;
        match self {
            Self::Numeric(_) => ExitStatus::NumericFailure,
            Self::Core(
                E::ConvergenceFailure(_)
                | E::InsufficientSamples(_)
                | E::AllSamplesFloored
                | E::NonProductStart { .. }
                | E::InvalidState(_),
            ) => ExitStatus::NumericFailure,
            _ => ExitStatus::ConfigError,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
