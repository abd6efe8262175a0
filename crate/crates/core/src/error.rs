use thiserror::Error;

#[derive(Debug, Error)]
pub enum QkrError {
    #[error("invalid dimension {0}: N must be odd")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not unitary: residual {residual:e} exceeds {threshold:e}")]
    NotUnitary { residual: f64, threshold: f64 },

    #[error("matrix is not symmetric: residual {residual:e} exceeds {threshold:e}")]
    NotSymmetric { residual: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver failed for {context}: {reason}")]
    Eigensolver { context: String, reason: String },

    #[error("tolerance violated in {what}: {value:e} > {limit:e}")]
    Tolerance {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed matrix container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QkrError> = std::result::Result<T, E>;
