use std::io;
use std::process::ExitCode;

use thiserror::Error;

/// Exit status for a bad flag combination.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when a chain or measurement rejects the scenario.
pub const EXIT_CHAIN: u8 = 3;
/// Exit status for file and stream failures.
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Chain(#[from] audiochain::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported WAV file: {0}")]
    UnsupportedWav(String),
    #[error("sample {index} ({volts} V) does not fit a {scale} V full-scale WAV")]
    Unrepresentable {
        index: usize,
        volts: f64,
        scale: f64,
    },
}

impl CliError {
    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Chain(_) => EXIT_CHAIN,
            CliError::Io(_)
            | CliError::Csv(_)
            | CliError::UnsupportedWav(_)
            | CliError::Unrepresentable { .. } => EXIT_IO,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.exit_status())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
