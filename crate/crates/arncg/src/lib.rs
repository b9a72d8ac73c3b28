//! Command-line support for the ARNCG solver: run specifications, trace and
//! report files, batch benchmarks and the local-order experiment.

pub mod bench;
mod error;
pub mod formats;
pub mod order;
pub mod run;
pub mod spec;
pub mod start;

pub use error::CliError;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL_FAILURE: i32 = 3;

/// Exit status for a finished solve.
pub fn exit_code(outcome: &arncg_core::Outcome) -> i32 {
    use arncg_core::Outcome::*;
    match outcome {
        Converged => EXIT_CONVERGED,
        IterationLimit | TimeLimit => EXIT_NOT_CONVERGED,
        NumericalFailure(_) => EXIT_NUMERICAL_FAILURE,
    }
}
