use thiserror::Error;

/// Errors raised by the GP and particle machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("partition inverse lost positive definiteness (conditional variance {0:e})")]
    LostPositiveDefiniteness(f64),

    #[error("design is degenerate: F'K^-1F is singular")]
    SingularDesign,

    #[error("posterior is improper: {count} data points, need more than {required}")]
    Improper { count: usize, required: usize },

    #[error("negative predictive variance {0:e}")]
    NegativeVariance(f64),

    #[error("expected improvement needs dof > 1, got {0}")]
    EiDegreesOfFreedom(f64),

    #[error("all resampling weights vanished or are NaN (offending particles: {offending:?})")]
    DegenerateWeights { offending: Vec<usize> },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("candidate pool exhausted: requested {requested}, pool holds {available}")]
    PoolExhausted { requested: usize, available: usize },

    #[error("no data")]
    EmptyData,

    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
