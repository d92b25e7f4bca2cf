use thiserror::Error;

/// Errors raised by the walk engines and analysis routines.
#[derive(Debug, Error)]
pub enum WalkError {
    #[error("checkpoint {checkpoint} outside of [0, {n}]")]
    CheckpointOutOfRange { checkpoint: usize, n: usize },

    #[error("position {x} outside of the reachable range [-{t}, {t}]")]
    OutOfDomain { x: i64, t: usize },

    #[error("empty window [{lo}, {hi}]")]
    EmptyWindow { lo: i64, hi: i64 },

    #[error("window [{lo}, {hi}] has fewer than {needed} live sites")]
    WindowTooSmall { lo: i64, hi: i64, needed: usize },

    #[error("non-positive value {value} at index {index} cannot be log-transformed")]
    NonPositive { index: usize, value: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("distribution is not normalized: total probability {total}")]
    NotNormalized { total: f64 },

    #[error("imaginary part {value} at k = {k} exceeds the symmetry tolerance")]
    ImaginaryResidual { k: f64, value: f64 },

    #[error("position grids differ: {0}")]
    GridMismatch(String),

    #[error("n = {n} exceeds the exact integer bound {max}; use the real-valued routine")]
    ExactBoundExceeded { n: usize, max: usize },

    #[error("unsupported protocol for this operation: {0}")]
    UnsupportedProtocol(String),

    #[error("eigenvalue solver failed: {0}")]
    Eigen(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WalkError>;
