use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("invalid config {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Model(#[from] spad_gate_core::Error),

    #[error("unknown preset `{0}`, expected fig3 to fig10 or all")]
    UnknownPreset(String),

    #[error("preset {preset}: {field} is {value}, expected {expected}")]
    PresetConstant {
        preset: &'static str,
        field: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("validation failed: {failed} of {total} points beyond 4 standard errors")]
    ValidationFailed { failed: usize, total: usize },

    #[error("invalid SPAD_GATE_THREADS `{0}`, expected a positive integer")]
    Threads(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            CliError::Config { .. } | CliError::Parse { .. } | CliError::Threads(_) => 2,
            _ => 3,
        }
    }
}
