use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dag| entry = {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("not a density operator: {0}")]
    NotAState(String),

    #[error("operand leaks outside the support of the reference operator (leak {leak:.3e})")]
    SupportMismatch { leak: f64 },

    #[error("invalid subsystem index {index} for {count} tensor factors")]
    InvalidIndex { index: usize, count: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("vector is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("objective is +inf at every attempted starting point")]
    InfeasibleStart,

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unphysical covariance matrix (symplectic eigenvalue {nu:.6} < 1)")]
    Unphysical { nu: f64 },

    #[error("truncation leakage {leakage:.3e} exceeds the limit {limit:.1e}")]
    Leakage { leakage: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}
