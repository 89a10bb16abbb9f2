use std::path::{Path, PathBuf};

use grnbat_core::GrnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Contract(GrnError),
}

impl CliError {
    pub const EXIT_CONFIG: u8 = 3;
    pub const EXIT_IO: u8 = 4;
    pub const EXIT_CONTRACT: u8 = 5;

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Io { .. } => Self::EXIT_IO,
            CliError::Contract(_) => Self::EXIT_CONTRACT,
        }
    }
}

impl From<GrnError> for CliError {
    fn from(e: GrnError) -> Self {
        match e {
            GrnError::InvalidConfig(m) => CliError::Config(m),
            GrnError::Io { path, source } => CliError::Io { path: path.into(), source },
            other => CliError::Contract(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
