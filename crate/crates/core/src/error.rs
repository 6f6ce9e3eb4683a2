//! Shared error type for construction and validation failures.
//!
//! Runtime simulation failures (numerical blow-up, assumption violations
//! mid-run) carry a partial trajectory and live in [`crate::sim::SimAbort`];
//! expression parsing and evaluation have their own error types in
//! [`crate::expr`]. Everything else — bad dimensions, out-of-range
//! parameters, unknown builtin names — lands here.

use crate::expr::{EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A slice or vector had the wrong length for the context.
    #[error("{context}: expected length {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A scalar or structural parameter failed validation.
    #[error("{context}: {message}")]
    InvalidParameter {
        context: &'static str,
        message: String,
    },

    /// A value that must be finite was NaN or infinite.
    #[error("{context}: value must be finite, got {value}")]
    NonFinite { context: &'static str, value: f64 },

    /// Requested a builtin system that does not exist.
    #[error("unknown builtin system `{0}` (available: pendulum, example2)")]
    UnknownBuiltin(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Error {
    pub(crate) fn invalid(context: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            context,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
