use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::validate::Diagnostic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse configuration: {0}")]
    Config(String),

    #[error("configuration is invalid ({} problems)", .0.len())]
    Invalid(Vec<Diagnostic>),

    #[error(transparent)]
    Solver(#[from] emspec::Error),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "<[Diagnostic]>::is_empty")]
    diagnostics: &'a [Diagnostic],
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Invalid(_) => "invalid-config",
            CliError::Solver(_) => "solver",
            CliError::Io { .. } => "io",
        }
    }

    /// Single-line JSON object describing the failure.
    pub fn to_json(&self) -> String {
        let diagnostics: &[Diagnostic] = match self {
            CliError::Invalid(d) => d,
            _ => &[],
        };
        serde_json::to_string(&ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            diagnostics,
        })
        .expect("error report serializes")
    }

    pub fn io(path: impl Into<PathBuf>, err: impl ToString) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}
