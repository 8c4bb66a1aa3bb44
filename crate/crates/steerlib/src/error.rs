use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge: off-diagonal residual {residual:.3e} after {sweeps} sweeps")]
    EigenConvergence { residual: f64, sweeps: usize },

    #[error("scalar function undefined at retained eigenvalue {0}")]
    FunctionDomain(f64),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("strategy cap exceeded: |A|^|X| = {0} > {1}")]
    StrategyCapExceeded(usize, usize),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
