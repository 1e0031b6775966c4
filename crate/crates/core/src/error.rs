use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("support accuracy is undefined for an empty estimate")]
    UndefinedAccuracy,

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("combinatorial search too large: {0} subsets (limit {1})")]
    TooLarge(u128, u128),

    #[error("degenerate result: {0}")]
    Degenerate(String),

    #[error("undefined criterion: {0}")]
    UndefinedCriterion(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("bad file format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
