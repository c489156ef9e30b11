use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] spinreset::Error),
    #[error("{0}")]
    Validation(String),
    #[error("{failed} verification check(s) failed")]
    Verify { failed: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Model(_) | Self::Validation(_) => EXIT_VALIDATION,
            Self::Verify { .. } => EXIT_VERIFY,
            Self::Io { .. } => EXIT_IO,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
