use crate::model::Grid;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch { expected: Grid, found: Grid },

    #[error("factorization failed: zero pivot in column {0}")]
    SingularMatrix(usize),

    #[error("solver residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed record data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure_same_grid(expected: Grid, found: Grid) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::GridMismatch { expected, found })
    }
}
