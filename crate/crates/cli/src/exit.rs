//! Process exit codes. Clap uses 2 for usage errors.

use std::fmt;

use gazeforge_core::Error;

pub const FAILURE: u8 = 1;
pub const MISSING_FILE: u8 = 3;
pub const SCHEMA: u8 = 4;
pub const INVALID_INPUT: u8 = 5;
pub const EMPTY_INPUT: u8 = 6;
pub const IO: u8 = 7;

/// Nothing to process.
#[derive(Debug)]
pub struct EmptyInput(pub String);

impl fmt::Display for EmptyInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "empty input: {}", self.0)
    }
}

impl std::error::Error for EmptyInput {}

pub fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<EmptyInput>().is_some() {
            return EMPTY_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::MissingFile { .. } => MISSING_FILE,
                Error::Schema(_) | Error::Json(_) | Error::Csv(_) => SCHEMA,
                Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::Degenerate(_)
                | Error::OutOfRange(_) => INVALID_INPUT,
                Error::Io { .. } | Error::Image(_) => IO,
            };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound { MISSING_FILE } else { IO };
        }
    }
    FAILURE
}

pub fn error_json(command: &str, err: &anyhow::Error, code: u8) -> serde_json::Value {
    serde_json::json!({
        "schema_version": crate::commands::SUMMARY_VERSION,
        "command": command,
        "ok": false,
        "exit_code": code,
        "error": format!("{err:#}"),
    })
}
