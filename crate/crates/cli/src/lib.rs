#![forbid(unsafe_code)]

//! Command-line pipeline tying the analysis library together:
//! ingest -> aggregate -> analyze -> report, driven by one TOML config.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

/// Failure kinds surfaced as machine-readable error records on stderr.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("path not found: {0}")]
    PathNotFound(String),
    #[error("ingestion incomplete: {0}")]
    IngestIncomplete(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::PathNotFound(_) => "PathNotFound",
            CliError::IngestIncomplete(_) => "IngestIncomplete",
        }
    }
}
