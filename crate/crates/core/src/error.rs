use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("expected dimension {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("state is not normalized: norm^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error(
        "time-dependent propagation did not converge: max entry difference {max_diff:e} \
         between step {dt:e} s and {half_dt:e} s"
    )]
    NotConverged {
        max_diff: f64,
        dt: f64,
        half_dt: f64,
        coarse: Box<nalgebra::DMatrix<num_complex::Complex64>>,
        fine: Box<nalgebra::DMatrix<num_complex::Complex64>>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::NotHermitian { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
