//! Command-line front end for the trellis solver stack: instance files,
//! solver dispatch, comparison reports, and instance generators.

pub mod bench;
pub mod format;
pub mod gen;
pub mod report;
pub mod run;

use thiserror::Error;

/// Process-level failure classes. Each maps to a distinct exit code so
/// scripts can tell a bad file from a genuinely infeasible instance.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    BudgetExceeded(String),
    #[error("no witness found in {attempts} attempts")]
    WitnessNotFound { attempts: u64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::WitnessNotFound { .. } => 1,
            CliError::Parse(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::BudgetExceeded(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<msdp_core::CoreError> for CliError {
    fn from(e: msdp_core::CoreError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<msdp_core::SolveError> for CliError {
    fn from(e: msdp_core::SolveError) -> Self {
        use msdp_core::SolveError::*;
        match &e {
            Core(_) => CliError::Parse(e.to_string()),
            Infeasible { .. } | NoFeasibleStart { .. } => CliError::Infeasible(e.to_string()),
            CompletionBudgetExhausted { .. } | EnumerationTooLarge { .. } => {
                CliError::BudgetExceeded(e.to_string())
            }
        }
    }
}
