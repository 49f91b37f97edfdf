use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("damping factor {alpha} is not below the measured bound {bound}")]
    AlphaTooLarge { alpha: f64, bound: f64 },

    #[error("series did not converge within {iterations} iterations (last term norm {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        partial: Vec<f64>,
    },

    #[error("linear system is singular at node {node}")]
    Singular { node: usize },

    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::AlphaTooLarge { .. } | Error::NotConverged { .. } | Error::Singular { .. }
        )
    }
}
