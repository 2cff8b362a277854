use std::fmt;

use barriers_core::GeomError;

/// Exit code 2: the invocation or configuration is wrong.
pub const EXIT_USAGE: i32 = 2;
/// Exit code 1: a numerical check failed or an output could not be written.
pub const EXIT_FAILURE: i32 = 1;

/// A terminal error, printed as `error code=<n> kind=<kind>: <message>` on one line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            kind: "numeric",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            kind: "io",
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace(['\n', '\r'], " ");
        write!(f, "error code={} kind={}: {msg}", self.code, self.kind)
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::InvalidInput(_)
            | GeomError::Config(_)
            | GeomError::Unsupported(_)
            | GeomError::UnsupportedGrade(_) => CliError::usage(e.to_string()),
            _ => CliError::numeric(e.to_string()),
        }
    }
}
