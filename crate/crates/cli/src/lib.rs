//! Command-line front end for liesys: problem files, reports and the example catalog.

pub mod catalog;
pub mod commands;
pub mod problem;
pub mod report;

use thiserror::Error;

pub use commands::{run_command, run_problem, Context, Overrides};
pub use problem::ProblemFile;
pub use report::{Check, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid problem file: {0}")]
    Schema(String),
    #[error("{0}")]
    Module(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn module(e: impl std::fmt::Display) -> Self {
        CliError::Module(e.to_string())
    }

    /// 2 for usage and schema problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Module(_) | CliError::Io(_) => 1,
        }
    }
}
