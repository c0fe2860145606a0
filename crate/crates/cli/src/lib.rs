//! Batch front end for `berr-core`: single solves with CSV/JSON/SVG output,
//! benchmark suites over grids of runs, and synthetic instance export.

pub mod bench;
pub mod output;
pub mod run;
pub mod spec;
pub mod synth;

pub use bench::{cmd_bench, BenchOptions, Suite};
pub use run::{cmd_solve, execute, Outcome, Report, Summary};
pub use spec::{Disguise, ProblemSpec, RhsSpec, RunSpec, SolverKind, SpecLayer};
pub use synth::cmd_synth;

/// Failure of a CLI command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or unreadable input, or an unwritable output path.
    #[error("{0}")]
    Spec(String),
    #[error("solver failed: {0}")]
    Solver(#[source] berr_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec(_) => 2,
            Self::Solver(_) => 3,
        }
    }

    pub(crate) fn io(what: &str, path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Spec(format!("{what} {}: {e}", path.display()))
    }
}
