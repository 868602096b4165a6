//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Riccati iteration did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("matrix is not Schur-stable (spectral radius {rho})")]
    Unstable { rho: f64 },

    #[error("empty estimation window")]
    EmptyWindow,

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("Elias Gamma requires a positive integer, got {0}")]
    ZeroOrNegative(i64),

    #[error("codebook infeasible for dimension {ds} at resolution {rho} (guard {guard:.1} > {limit})")]
    Infeasible { ds: usize, rho: f64, guard: f64, limit: f64 },

    #[error("quantizer overflow: innovation norm {norm} exceeds scale {scale}")]
    Overflow { norm: f64, scale: f64 },

    #[error("hard-instance constant c={c} violates the feasibility bound {bound}")]
    CChoiceViolated { c: f64, bound: f64 },

    #[error("hard-instance matrix M_K is not positive definite (min eigenvalue {min_eig:.3e})")]
    SingularPhi { min_eig: f64 },

    #[error("controller synthesis failed: {0}")]
    RiccatiFailure(String),

    #[error("resolution must lie in (0, 1/sqrt(2)), got {0}")]
    RhoOutOfRange(f64),

    #[error("unknown benchmark system `{0}`")]
    UnknownSystem(String),

    #[error("benchmark data failed validation: {0}")]
    ValidationFailure(String),

    #[error("bitstream decode error: {0}")]
    Decode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
