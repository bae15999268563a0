use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid code parameters: {0}")]
    Parameter(String),

    #[error("generator matrix is rank deficient (rank {rank} < {expected})")]
    SingularCode { rank: usize, expected: usize },

    #[error("convolutional code constraint violated: n = {n} is not greater than (mu + 1)(n - k) = {bound}")]
    Constraint { n: usize, bound: usize },

    #[error("parity kernel stack is rank deficient (rank {rank} < {expected})")]
    Construction { rank: usize, expected: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("malformed input at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("stage state is missing {0}")]
    State(&'static str),

    #[error("fault model targets {expected} but was applied to {actual}")]
    TargetMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("activation threshold has not been calibrated")]
    Uncalibrated,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(expected: impl ToString, actual: impl ToString) -> Error {
    Error::Dimension {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
