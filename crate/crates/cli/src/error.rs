use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failures of the driver, grouped by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments, or input files. Exit code 1.
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Training or solving produced an unusable result. Exit code 2.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<xva_pinn_core::Error> for CliError {
    fn from(e: xva_pinn_core::Error) -> Self {
        use xva_pinn_core::Error as E;
        match e {
            E::NonFinite { .. } | E::ZeroReferenceNorm => CliError::Numeric(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}
