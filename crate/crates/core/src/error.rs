use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input data or parameters violate a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{name} = {value} is outside the open interval (0, 1)")]
    Domain { name: &'static str, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cluster statistics are required for clustered inference")]
    MissingClusterStats,

    #[error("no classification possible: empty feasible set")]
    EmptyFeasibleSet,

    #[error("margin assumption violated: P(Y = 1 | x) equals tau at support point {index}")]
    MarginViolated { index: usize },

    #[error("simplex exceeded {limit} pivots without converging")]
    IterationLimit { limit: usize },

    #[error("numerical breakdown in simplex: {0}")]
    Numerical(&'static str),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub(crate) fn check_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name, value })
    }
}
