use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Exit codes of the `bcs` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const TOLERANCE: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const SINGULARITY: i32 = 3;
    pub const SPECTRAL: i32 = 4;
}

/// A configuration problem, located in the source file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(line), Some(col)) => write!(f, "{}:{line}:{col}: {}", self.path, self.message),
            (Some(line), None) => write!(f, "{}:{line}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] bcs_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use bcs_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::IntegrationHalted { .. } | E::SingularConfiguration { .. } | E::NotInChamber { .. } => {
                    exit::SINGULARITY
                }
                E::SpectralBreakdown { .. }
                | E::ContinuityLost { .. }
                | E::ImaginaryPart { .. }
                | E::NotHermitian { .. }
                | E::NonFinite { .. } => exit::SPECTRAL,
                _ => exit::INVALID_INPUT,
            },
            _ => exit::INVALID_INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
