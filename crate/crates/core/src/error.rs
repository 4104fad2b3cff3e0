use thiserror::Error;

/// Errors produced by the library. Violations found by verification routines
/// are reported as data, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("no contractive power of the inverse matrix found for m <= {0}")]
    NotContractive(usize),

    #[error("modulus verification failed: worst violation {worst_violation:e}")]
    ModulusRejected { worst_violation: f64 },

    #[error("cell index {index} does not fit the {bits}-bit lattice encoding")]
    LatticeOverflow { index: i64, bits: u32 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
