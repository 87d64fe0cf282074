use alloc::string::String;

use crate::model::ValidationReport;

/// Errors raised by the library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(ValidationReport),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("prior mismatch: {0}")]
    PriorMismatch(&'static str),

    #[error("empty submenu")]
    EmptySubmenu,

    #[error("unknown action label {0:?}")]
    UnknownAction(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("gradient unbounded at boundary belief (state index {state})")]
    BoundaryBelief { state: usize },

    #[error("not rationalizable under this cost: {0}")]
    NotRationalizable(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("solver trapped at the boundary: {0}")]
    BoundaryTrap(String),

    #[error("SCR is not certified optimal (residual {residual:e})")]
    NotOptimal { residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
