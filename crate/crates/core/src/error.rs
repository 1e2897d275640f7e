use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("matrix not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
    #[error("unknown register {0}")]
    UnknownRegister(String),
    #[error("power iteration did not converge after {iterations} steps (last estimate {last})")]
    NoConvergence { iterations: usize, last: f64 },
    #[error("{what} of size {size} exceeds cap {cap}")]
    TooLarge { what: String, size: usize, cap: usize },
    #[error("output set exhausted on slot {slot}")]
    DomainExhausted { slot: u8 },
    #[error("database size {size} exceeds budget {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error("duplicate pair ({x:#x},{y:#x}) in slot {slot}")]
    DuplicatePair { slot: u8, x: u64, y: u64 },
    #[error("arity mismatch")]
    ArityMismatch,
    #[error("output rule violates its subset condition at {0}")]
    ContractViolation(String),
    #[error("relation state overlap between mixed distinctness classes")]
    Unsupported,
    #[error("database is not good")]
    NotGood,
    #[error("not parametrizable: {0}")]
    NotParametrizable(String),
    #[error("state leaves the good subspace (residual {0:e})")]
    OutsideGood(f64),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
