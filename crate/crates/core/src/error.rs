//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree {got} exceeds the allowed degree {max}")]
    DegreeTooLarge { max: u32, got: u32 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is singular")]
    Singular,
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("no p-adic witness found for p = {p} with v <= {v_max}")]
    NoWitness { p: u64, v_max: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid variable split: {0}")]
    InvalidSplit(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("rank contradiction: {0}")]
    RankContradiction(String),
    #[error("randomized and symbolic phases disagree: {0}")]
    Disagreement(String),
    #[error("falsification alarm: {0}")]
    FalsificationAlarm(String),
    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),
    #[error("unresolved: {0}")]
    Unresolved(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation failed: {0:?}")]
    Validation(Vec<String>),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
