use std::io;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("file not found: {}", path.display())]
    NotFound { path: PathBuf },

    #[error("schema violation at {path}: {message}")]
    Schema {
        path: String,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("unknown gate at {path}: {message}")]
    UnknownGate {
        path: String,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] tfsim::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

/// Error object written to stderr as a single JSON line.
#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
    exit_code: i32,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::NotFound { .. } => "file-not-found",
            CliError::Schema { .. } => "schema-violation",
            CliError::UnknownGate { .. } => "unknown-gate",
            CliError::Usage(_) => "usage",
            CliError::Core(tfsim::Error::CostGuard { .. }) => "cost-guard",
            CliError::Core(_) => "computation",
            CliError::Io { .. } => "io",
        }
    }

    /// 3 missing file, 4 schema, 5 cost guard, 6 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotFound { .. } => 3,
            CliError::Schema { .. } | CliError::UnknownGate { .. } => 4,
            CliError::Core(tfsim::Error::CostGuard { .. }) => 5,
            _ => 6,
        }
    }

    pub fn to_json(&self) -> String {
        let (path, line, column) = match self {
            CliError::Schema {
                path, line, column, ..
            }
            | CliError::UnknownGate {
                path, line, column, ..
            } => (Some(path.as_str()), *line, *column),
            _ => (None, None, None),
        };
        let report = ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            path,
            line,
            column,
            exit_code: self.exit_code(),
        };
        serde_json::to_string(&report).expect("error report serializes")
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            CliError::NotFound { path }
        } else {
            CliError::Io { path, source }
        }
    }
}
