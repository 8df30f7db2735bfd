use thiserror::Error;

use crate::oracle::Point;

/// Errors raised by oracles, solvers, parsers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value while evaluating {context}{}", coordinate.map(|c| format!(" (coordinate {c})")).unwrap_or_default())]
    NonFinite {
        context: &'static str,
        coordinate: Option<usize>,
    },

    #[error("iterate diverged at step {step} with step size {step_size:e}")]
    Divergence { step: usize, step_size: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("oracle does not support {0}")]
    Capability(&'static str),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear algebra error: {0}")]
    LinAlg(String),

    #[error("inner solve failed its criterion at outer iteration {iteration}: lhs {lhs:e} > rhs {rhs:e}")]
    InnerCriterion { iteration: usize, lhs: f64, rhs: f64 },

    #[error("reference solve did not converge after {evaluations} gradient evaluations (best gradient norm {grad_norm:e})")]
    Unconverged {
        evaluations: usize,
        grad_norm: f64,
        best: Box<Point>,
    },

    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
