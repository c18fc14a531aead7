//! Pipelines behind the `emlfit` command line: configuration, trace
//! ingestion, the three subcommand runs, and report emission.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod report;

use thiserror::Error;

/// Top-level failure classes, mapped to process exit codes.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("every candidate was infeasible")]
    AllInfeasible,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::AllInfeasible => 4,
            AppError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> AppError {
        AppError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
