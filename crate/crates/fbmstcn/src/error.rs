//! Application errors and their process exit codes.

use fbmstcn_core::Error as CoreError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

/// Exit codes are stable: scripts depend on them.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const BAD_AUDIO: i32 = 2;
    pub const BAD_CHECKPOINT: i32 = 3;
    pub const SELFTEST_FAILED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("bad input audio: {0}")]
    Audio(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Audio(_) | AppError::Core(CoreError::InvalidSampleRate { .. }) => {
                exit::BAD_AUDIO
            }
            AppError::Checkpoint(_) => exit::BAD_CHECKPOINT,
            AppError::Failed(_) => exit::SELFTEST_FAILED,
            _ => exit::USAGE,
        }
    }
}
