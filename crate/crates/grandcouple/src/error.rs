use std::path::PathBuf;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for an unreadable or invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code when a run breaches its censoring or timeout threshold.
pub const EXIT_BREACH: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] grandcouple_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("censoring threshold breached: {0}")]
    Breach(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ReadConfig { .. } => EXIT_CONFIG,
            Self::Breach(_) | Self::Core(grandcouple_core::Error::IterationCap { .. }) => {
                EXIT_BREACH
            }
            // Bad parameters inside an otherwise well-formed config.
            Self::Core(
                grandcouple_core::Error::InvalidParameter(_)
                | grandcouple_core::Error::DimensionMismatch { .. }
                | grandcouple_core::Error::SpaceMismatch(_)
                | grandcouple_core::Error::UnsupportedKind { .. },
            ) => EXIT_CONFIG,
            _ => 1,
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
