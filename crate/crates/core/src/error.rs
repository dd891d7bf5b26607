use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration diverged at t = {time} s: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("mass budget inconsistent: residual body mass {residual} kg is negative")]
    MassBudget { residual: f64 },

    #[error("averaging window is empty (settle {settle} s, trajectory ends at {end} s)")]
    EmptyWindow { settle: f64, end: f64 },

    #[error("grid axes do not match: {0}")]
    AxisMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("all {0} objective evaluations failed")]
    AllEvaluationsFailed(usize),

    #[error("{path}: row {row}: {message}")]
    Schema { path: PathBuf, row: usize, message: String },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
