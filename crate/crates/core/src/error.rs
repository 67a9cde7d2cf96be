use thiserror::Error;

/// Errors raised anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: {rows}x{cols} matrix")]
    DegenerateShape { rows: usize, cols: usize },

    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mass matrix singular")]
    MassMatrixSingular,

    #[error("subspace not controlled invariant (residual {residual:.3e} > {bound:.3e})")]
    NotControlledInvariant { residual: f64, bound: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error("divergence at t = {time} s")]
    Divergence { time: f64 },

    #[error("singular dynamics at t = {time} s")]
    SingularDynamics { time: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
