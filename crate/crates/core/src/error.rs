use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph not connected")]
    Disconnected,

    #[error("not a ruler: {0}")]
    NotARuler(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("not PSD: minimum eigenvalue {min_eig:e} below tolerance {tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
