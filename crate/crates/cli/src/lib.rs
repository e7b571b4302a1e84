//! Library side of the `gmt` command-line tool.
//!
//! Each subcommand is a plain function returning a [`CommandOutput`] (the
//! JSON report, a CSV table, and an exit code) so it can be driven and
//! tested without spawning a process. `main.rs` only parses arguments and
//! writes the outputs.

// `!(a < b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod output;
pub mod scene;

use thiserror::Error;

pub use commands::{
    run_area, run_coarea, run_limit_study, run_net, AreaReport, CoareaArgs, LimitStudyReport,
    NetArgs, NetReport,
};
pub use scene::{parse_scalar, CurveFamily, Scene};

/// Exit codes shared by all subcommands.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const COAREA_MISMATCH: i32 = 3;
    pub const SARD_BUDGET: i32 = 4;
}

/// Which rendering a command writes to stdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primary {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub json: String,
    pub csv: String,
    pub primary: Primary,
    pub code: i32,
    /// Diagnostics for stderr; never report data.
    pub warnings: Vec<String>,
}

impl CommandOutput {
    pub fn stdout(&self) -> &str {
        match self.primary {
            Primary::Json => &self.json,
            Primary::Csv => &self.csv,
        }
    }
}

/// A failed command: an exit code, a message for stderr, and whatever
/// partial report the command could still produce.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
    pub output: Option<Box<CommandOutput>>,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: exit::VALIDATION,
            message: message.into(),
            output: None,
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: exit::NUMERICAL,
            message: message.into(),
            output: None,
        }
    }

    pub fn with_output(mut self, output: CommandOutput) -> Self {
        self.output = Some(Box::new(output));
        self
    }
}
