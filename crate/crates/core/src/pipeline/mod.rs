//! End-to-end driver: population, risk imputation, deprivation deciles,
//! tiers, allocation sweeps, metrics, and the files each stage writes.

mod config;
mod plot;
mod run;

use thiserror::Error;

pub use config::{InputPaths, RunConfig, DEFAULT_FAIR_SHARE_SUPPLIES};
pub use plot::{cmd_plot, render_chart, Chart, Series};
pub use run::{
    cmd_census, cmd_fair_share, cmd_generate, cmd_run, prepare, sha256_file, Manifest, Prepared,
    SUBSTREAMS,
};

/// How a failure maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, kind: ErrorKind, message: impl Into<String>) -> Self {
        PipelineError {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn validation(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Validation, e.to_string())
    }

    pub fn io(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Io, e.to_string())
    }

    pub fn internal(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Internal, e.to_string())
    }
}
