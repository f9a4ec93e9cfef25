use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("alphabet has {0} symbols; at most 256 are supported")]
    AlphabetTooLarge(usize),
    #[error("duplicate token {0:?} in alphabet")]
    DuplicateToken(String),
    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { token: String, position: usize },
    #[error("symbol id {0} is outside the alphabet")]
    SymbolOutOfRange(u8),
    #[error("empty sequence")]
    EmptySequence,
    #[error("block length must be at least 1")]
    ZeroBlockLength,
    #[error("k exceeds sequence length (k = {k}, n = {n})")]
    KExceedsLength { k: usize, n: usize },
    #[error("block of length {got} where length {expected} was expected")]
    BlockLength { expected: usize, got: usize },
    #[error("negative or non-finite mass {0}")]
    InvalidMass(f64),
    #[error("total mass {0} differs from one")]
    MassNotNormalized(f64),
    #[error("measure has no atoms")]
    EmptyMeasure,
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("cost matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    CostShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("cost entry ({0}, {1}) is negative or non-finite")]
    InvalidCost(usize, usize),
    #[error("problem needs {needed} entries, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("transport problem is infeasible")]
    Infeasible,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sinkhorn did not converge after {iterations} iterations (violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True when the error stems from bad user input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::Infeasible | Error::NotConverged { .. } | Error::BudgetExceeded { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
