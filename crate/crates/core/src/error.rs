use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("quadrature did not converge: last two iterates at M_q={resolution} differ by {discrepancy:.3e} (tol {tol:.1e})")]
    QuadratureUnconverged {
        resolution: usize,
        discrepancy: f64,
        tol: f64,
    },

    #[error("quadrature budget exceeded: need M_q={required}, cap is {cap}")]
    QuadratureBudget { required: usize, cap: usize },

    #[error("NaN detected at step {step}")]
    NanDetected { step: usize },

    #[error("reference solution unconverged: self-error {self_error:.3e} exceeds {threshold:.3e}")]
    ReferenceUnconverged { self_error: f64, threshold: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error reports and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::QuadratureUnconverged { .. } => "quadrature_unconverged",
            Error::QuadratureBudget { .. } => "quadrature_budget",
            Error::NanDetected { .. } => "nan_detected",
            Error::ReferenceUnconverged { .. } => "reference_unconverged",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
