use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{what} is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { what: String, min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("parameter set is not admissible: {0}")]
    NotAdmissible(String),

    #[error("rank of {what} is ambiguous at tolerance {tol:e}: eigenvalue {eigenvalue:e} too close to the threshold")]
    RankAmbiguous { what: String, tol: f64, eigenvalue: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
