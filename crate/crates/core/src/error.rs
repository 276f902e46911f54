use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped so the CLI can map them onto its exit codes:
/// validation problems (1), invariant violations (2) and backend caps (3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{what} exceeds cap: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("window too small: radius {radius} < {required} needed for {slices} slices")]
    WindowTooSmall {
        radius: usize,
        required: usize,
        slices: usize,
    },

    #[error("grid side {side} too small for kernel support (need even side >= {required})")]
    GridTooSmall { side: usize, required: usize },

    #[error("random-walk Green sum diverges in d = {0} (recurrent walk)")]
    Divergent(usize),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("denominator {value:e} within {tol:e} of zero in {what}")]
    VanishingDenominator {
        what: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("line `{0}` is not admissible for this construction")]
    NotAdmissible(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("field mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Parse { .. }
            | Error::Mismatch(_)
            | Error::GridTooSmall { .. }
            | Error::WindowTooSmall { .. }
            | Error::NotAdmissible(_) => 1,
            Error::Invariant(_)
            | Error::Divergent(_)
            | Error::IllConditioned(_)
            | Error::VanishingDenominator { .. } => 2,
            Error::CapExceeded { .. } => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
