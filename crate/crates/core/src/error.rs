use thiserror::Error;

pub type Result<T, E = TeimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TeimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("index {index} out of bounds for dimension {bound}")]
    IndexOutOfBounds { index: usize, bound: usize },

    #[error("duplicate index {0} in selection")]
    DuplicateIndex(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular interpolation system: {0}")]
    Singular(String),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("interpolation points do not form a rectangular grid: {0}")]
    NonRectangular(String),

    #[error("relative error undefined: reference slice {0} has zero norm")]
    ZeroNorm(usize),

    #[error("non-finite state at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TeimError {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TeimError::Singular(_)
                | TeimError::RankDeficient(_)
                | TeimError::NonRectangular(_)
                | TeimError::BlowUp { .. }
                | TeimError::ZeroNorm(_)
        )
    }
}
