//! Command-line front end: scenario documents, command dispatch and
//! deterministic CSV/JSON reports.

pub mod commands;
pub mod document;
pub mod format;

pub use commands::{run_command, CommandResult};
pub use document::{parse_scenario, ScenarioDocument};

/// Failure of a command; decides the exit code and the diagnostic name.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("at '{path}': {reason}")]
    Parse { path: String, reason: String },

    #[error(transparent)]
    Domain(#[from] twotime::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Parse { .. } => "ParseError",
            CliError::Domain(e) => e.name(),
            CliError::Io(_) => "IoError",
        }
    }

    /// 2 for usage and parse errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}
