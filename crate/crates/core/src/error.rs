use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:e} at ({row}, {col}))")]
    NotHermitian {
        max_asymmetry: f64,
        row: usize,
        col: usize,
    },

    #[error("domain error: {function} undefined for eigenvalue {eigenvalue:e}")]
    Domain { function: &'static str, eigenvalue: f64 },

    #[error("size error: {0}")]
    Size(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("invalid density matrix: {0}")]
    Validation(String),

    #[error("numeric abort: {0}")]
    NumericAbort(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
