use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("noise level {t} is below the floor {floor}; clamp the time grid")]
    BelowNoiseFloor { t: f64, floor: f64 },

    #[error("covariance is singular or not positive definite")]
    SingularCovariance,

    #[error("flow diverged (non-finite state) at step {step}")]
    Divergence { step: usize },

    #[error("flow diverged at sample {sample}, step {step}")]
    SampleDivergence { sample: usize, step: usize },

    #[error("exact assignment limited to {limit} points per side, got {count}")]
    CostGuard { count: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
