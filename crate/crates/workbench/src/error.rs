use std::fmt;
use std::path::Path;

use discourse_core::discourse::DiscourseError;
use discourse_core::grammar::GrammarError;
use discourse_core::interop::InteropError;
use discourse_core::notebook::NotebookError;
use discourse_core::pattern::PatternError;
use serde::Serialize;
use serde_json::{json, Value};

/// A machine-readable failure: a stable `E_*` code, a human message and
/// optional structured details (file and line for outline errors, generations
/// for conflicts).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkbenchError {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl WorkbenchError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        WorkbenchError {
            code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn conflict(expected: u64, current: u64) -> Self {
        WorkbenchError::new(
            "E_CONFLICT",
            format!("generation {expected} is stale; the current generation is {current}"),
        )
        .with_details(json!({ "expected": expected, "current": current }))
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        WorkbenchError::new("E_IO", format!("{}: {err}", path.display()))
            .with_details(json!({ "path": path.display().to_string() }))
    }

    pub fn span(message: impl Into<String>) -> Self {
        WorkbenchError::new("E_SPAN", message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        WorkbenchError::new("E_USAGE", message)
    }

    /// The `{"error": ...}` document printed on stderr and returned by the API.
    pub fn to_json(&self) -> Value {
        json!({ "error": self })
    }
}

impl fmt::Display for WorkbenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for WorkbenchError {}

impl From<NotebookError> for WorkbenchError {
    fn from(e: NotebookError) -> Self {
        let details = match &e {
            NotebookError::Indent { file, line, .. } => Some(json!({ "file": file, "line": line })),
            NotebookError::Io { path, .. } | NotebookError::Encoding { path } => {
                Some(json!({ "path": path.display().to_string() }))
            }
            _ => None,
        };
        WorkbenchError {
            code: e.code().to_string(),
            message: e.to_string(),
            details,
        }
    }
}

macro_rules! from_coded {
    ($($ty:ty),*) => {$(
        impl From<$ty> for WorkbenchError {
            fn from(e: $ty) -> Self {
                WorkbenchError::new(e.code(), e.to_string())
            }
        }
    )*};
}

from_coded!(GrammarError, PatternError, DiscourseError, InteropError);

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;
