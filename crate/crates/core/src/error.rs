use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("coupling is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid nonideality matrix: {0}")]
    InvalidNonideality(String),

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("measure is not informationally complete (rank {rank} < {required})")]
    Incomplete { rank: usize, required: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no-signaling violated (max discrepancy {0:.3e})")]
    Signaling(f64),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}
