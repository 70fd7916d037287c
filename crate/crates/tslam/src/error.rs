use std::path::PathBuf;

use thiserror::Error;

/// Failures of the workbench, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact {path}: {why}")]
    MissingArtifact { path: PathBuf, why: String },
    #[error("{what} digest mismatch: artifact has {found}, expected {expected} (use --force-digest to override)")]
    DigestMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{path}: {why}")]
    Format { path: PathBuf, why: String },
    #[error(transparent)]
    Core(#[from] tslam_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl WorkbenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WorkbenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, why: impl Into<String>) -> Self {
        WorkbenchError::Format {
            path: path.into(),
            why: why.into(),
        }
    }

    pub fn missing(path: impl Into<PathBuf>, why: impl Into<String>) -> Self {
        WorkbenchError::MissingArtifact {
            path: path.into(),
            why: why.into(),
        }
    }

    /// 0 success, 1 usage (and any other failure), 2 config, 3 missing or
    /// mismatched artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Config(_) => 2,
            WorkbenchError::MissingArtifact { .. } | WorkbenchError::DigestMismatch { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;
