use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Input {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// 0 success, 1 verification failure, 2 usage error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Input { .. } => 3,
        }
    }
}

impl From<fdbscan::Error> for CliError {
    fn from(e: fdbscan::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
