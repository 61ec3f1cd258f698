use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: unknown key `{0}`")]
    UnknownKey(String),
    #[error("unknown experiment `{name}`; valid: {valid}")]
    UnknownExperiment { name: String, valid: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerics(#[from] entropy_lab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::UnknownKey(_) | Self::UnknownExperiment { .. } => 2,
            Self::Invariant(_) => 3,
            Self::Io { .. } => 4,
            // Rejected parameters are configuration problems; everything else
            // is a numerical failure inside a run.
            Self::Numerics(e) => match e {
                entropy_lab::Error::RejectedInput(_)
                | entropy_lab::Error::Parameter(_)
                | entropy_lab::Error::Range(_)
                | entropy_lab::Error::OutOfRange { .. }
                | entropy_lab::Error::SubcriticalPopulation { .. }
                | entropy_lab::Error::TimeStep { .. } => 2,
                _ => 3,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config_error",
            3 => "invariant_violation",
            _ => "io_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
