//! The `lab` command: runs audit scenarios against rotationally symmetric
//! spaces with density and writes reports, series and plots.

pub mod explore;
pub mod kv;
pub mod report;
pub mod run;
pub mod scenario;
pub mod svg;

use std::path::PathBuf;

use densitylab::{AbpError, ComparisonError, GeometryError};
use thiserror::Error;

pub use explore::{explore, ExploreTable, Family};
pub use report::{CheckRecord, Report, Status};
pub use run::{execute, run_scenario, RunOptions, RunOutput};
pub use scenario::{Check, Scenario};

/// Exit code when every check passed or only recorded data.
pub const EXIT_OK: i32 = 0;
/// Exit code for an inequality or monotonicity violation on a certified space.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit code for configuration and numerical errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", config_message(*line, field.as_deref(), message))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Comparison(#[from] ComparisonError),
    #[error(transparent)]
    Abp(#[from] AbpError),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

fn config_message(line: Option<usize>, field: Option<&str>, message: &str) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!("line {l}, field `{f}`: {message}"),
        (Some(l), None) => format!("line {l}: {message}"),
        (None, Some(f)) => format!("field `{f}`: {message}"),
        (None, None) => message.to_string(),
    }
}

impl CliError {
    pub fn config(line: usize, field: Option<&str>, message: String) -> Self {
        CliError::Config {
            line: Some(line),
            field: field.map(str::to_string),
            message,
        }
    }

    pub fn field(field: &str, message: String) -> Self {
        CliError::Config {
            line: None,
            field: Some(field.to_string()),
            message,
        }
    }

    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}
