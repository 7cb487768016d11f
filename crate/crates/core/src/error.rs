use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not meet its stopping rule, or its argument exceeds the cap.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// The matrix does not have one of the supported eigen-structures.
    #[error("unsupported system: {0}")]
    Rejected(String),

    /// The scaling x rotation split is not available for this transformation.
    #[error("factorization error: {0}")]
    Factorization(String),

    /// A curve point is not regular (zero speed) or a matrix is singular.
    #[error("singular: {0}")]
    Singular(String),

    /// Two trajectories were expected to share a time grid but do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A structurally invalid input (empty grid, wrong dimension, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence(_) => "convergence",
            Error::Rejected(_) => "rejected",
            Error::Factorization(_) => "factorization",
            Error::Singular(_) => "singular",
            Error::GridMismatch(_) => "grid-mismatch",
            Error::InvalidInput(_) => "invalid-input",
        }
    }

    /// True for failures caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Rejected(_) | Error::InvalidInput(_) | Error::GridMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
