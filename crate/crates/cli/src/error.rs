use std::path::{Path, PathBuf};

use qrk_core::{LinalgError, ProblemError, SolverError, TheoryError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("aggregation needs trials >= 2 (got {0}); use `qrk solve` for a single trial")]
    Aggregation(usize),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// Process exit code: 2 config, 3 numeric/regime, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Aggregation(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Aggregation(_) => "aggregation",
            Self::Numeric(_) => "numeric",
            Self::Io { .. } => "io",
        }
    }

    /// `error[kind]: message`, flattened onto one line.
    pub fn report_line(&self) -> String {
        let text = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.kind(), text)
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(msg) => Self::config("solver", msg),
            other => Self::Numeric(other.to_string()),
        }
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        Self::Numeric(e.to_string())
    }
}

/// Problem errors need the file they came from to be reported as I/O.
pub fn problem_error(e: ProblemError, path: Option<&Path>) -> CliError {
    match (e, path) {
        (ProblemError::InvalidDims(msg), _) => CliError::config("dims", msg),
        (ProblemError::InvalidBeta(b), _) => {
            CliError::config("beta", format!("{b} outside [0, 1)"))
        }
        (e @ ProblemError::LayerCountMismatch { .. }, _) => {
            CliError::config("layer_rows", e.to_string())
        }
        (
            e @ (ProblemError::ParseError { .. }
            | ProblemError::NonNumericField { .. }
            | ProblemError::EmptyFile
            | ProblemError::Io(_)),
            Some(path),
        ) => CliError::io(path, e),
        (e @ ProblemError::Io(_), None) => CliError::Io {
            path: PathBuf::new(),
            message: e.to_string(),
        },
        (e, _) => CliError::Numeric(e.to_string()),
    }
}
