//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is {found:?} but the operation needs {expected:?}")]
    RepresentationMismatch {
        expected: crate::grid::Representation,
        found: crate::grid::Representation,
    },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {0} is not a stored checkpoint")]
    NotCheckpoint(f64),

    #[error("S-norm guard tripped at t = {time}: {s_norm:.3e} exceeds {limit:.3e}")]
    NormGuard { time: f64, s_norm: f64, limit: f64 },

    #[error("convergence verdict is {0}, not converged")]
    NotConverged(String),

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
