use std::path::Path;

use cabinsynth_core::config::Violation;
use thiserror::Error;

/// Pipeline failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Config(Vec<Violation>),
    #[error("cannot load configuration: {0}")]
    ConfigLoad(String),
    #[error("render backend unavailable: {message}\nhint: {hint}")]
    BackendMissing { message: String, hint: String },
    #[error("render backend failed on sample {sample}: {message}")]
    BackendFailed { sample: u64, message: String },
    #[error("data mismatch: {0}")]
    DataMismatch(String),
    #[error("dataset failed validation with {0} issue(s)")]
    Validation(usize),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl PipelineError {
    /// 0 ok, 1 validation (and I/O), 2 config, 3 backend, 4 data mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::ConfigLoad(_) => 2,
            PipelineError::BackendMissing { .. } | PipelineError::BackendFailed { .. } => 3,
            PipelineError::DataMismatch(_) => 4,
            PipelineError::Validation(_) | PipelineError::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            context: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
