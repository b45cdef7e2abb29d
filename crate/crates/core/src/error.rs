use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("generator index {index} out of range 1..={rank}")]
    GeneratorOutOfRange { index: usize, rank: usize },

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("operation requires rank {expected}, got {actual}")]
    RankRequired { expected: usize, actual: usize },

    #[error("truncation degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("coefficient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at position {position} in {input:?}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{what} needs {required} but the cap is {cap}")]
    BudgetExceeded {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("order comparison undecided through degree {depth}")]
    Undecided { depth: usize },

    #[error("{0} is not in the positive cone")]
    NotPositive(String),

    #[error("length vanishes on sequence element {index}")]
    ZeroLength { index: usize },

    #[error("zero entry at index {index}")]
    ZeroEntry { index: usize },

    #[error("identity element in support")]
    IdentityInSupport,

    #[error("multiplier symbol undefined at {0}")]
    SymbolUndefined(String),

    #[error("negative kernel entry {value} at ({row}, {col})")]
    NegativeKernelEntry { row: usize, col: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (estimate {estimate}, residual {residual})")]
    NonConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("positivity violation: Ritz value {ritz}")]
    PositivityViolation { ritz: f64 },

    #[error("sequence is not lacunary: {0}")]
    NotLacunary(String),
}
