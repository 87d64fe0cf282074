//! Command-line front end for `infochoice`: JSON problem files in, canonical
//! JSON (or CSV) results out.
//!
//! Exit status is 0 on success, 1 on I/O failure, 2 on invalid input and 3
//! when a solver fails to converge. Errors are printed to stderr as
//! `{"error":{"code":…,"message":…,"location":…}}`.

pub mod commands;
pub mod error;
pub mod json;
pub mod problem;

pub use commands::{run, Cli, Command};
pub use error::{CliError, Result};
pub use problem::{CostFile, Problem, ProblemFile};
