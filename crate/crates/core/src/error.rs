use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: max |A_ij - conj(A_ji)| = {max_asymmetry:e} exceeds {tolerance:e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("eigensolver did not converge for {name} ({dim}x{dim})")]
    EigenNonConvergence { name: String, dim: usize },

    #[error("not a density operator: {reason}")]
    InvalidState { reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("closed-form denominator D2 = {d2:e} vanishes")]
    SingularClosedForm { d2: f64 },

    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_time(self, time: f64) -> Self {
        Error::AtTime {
            time,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
