use std::fmt;

use serde::Serialize;

/// Failure classes, each with a fixed process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The analytic solution exists but is not a probability law, or no batch
    /// size yields one.
    AnalyticInvalid,
    /// Bad flags or file, unwritable output, or parameters outside the model's domain.
    Config,
    /// A solver gave up, e.g. at the truncation cap.
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::AnalyticInvalid => 1,
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            exit_code: kind.exit_code(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Numerical, message)
    }

    /// The record written to standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<bulkq_core::Error> for CliError {
    fn from(e: bulkq_core::Error) -> Self {
        use bulkq_core::Error as E;
        let kind = match &e {
            // ρ ≥ 1 violates the model's precondition; it is an input problem
            E::NoRoot { .. } | E::Domain(_) | E::InvalidParams(_) => ErrorKind::Config,
            E::NoValidPoint => ErrorKind::AnalyticInvalid,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("cannot write output: {e}"))
    }
}
