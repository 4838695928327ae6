use std::path::Path;

use aoi_core::AoiError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] AoiError),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("comparison failed: {0}")]
    Comparison(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 invalid configuration, 3 convergence or tolerance failure,
    /// 4 comparison failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(AoiError::TailTooLarge { .. } | AoiError::NoConvergence { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Comparison(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}
