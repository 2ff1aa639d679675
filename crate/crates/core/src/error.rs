use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("field {p}^{k} is outside the configured budget (degree 1..=6, order <= {max_order})")]
    DegreeOutOfBudget { p: u32, k: u32, max_order: u32 },
    #[error("modulus is not a monic irreducible polynomial of degree {0}")]
    ReducibleModulus(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different fields")]
    FieldMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("enumeration of {needed} points exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("embedding F_{{{p}^{j}}} into a larger field is not supported")]
    UnsupportedEmbedding { p: u32, j: u32 },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable {name} at line {line}, column {column}")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("coefficient {value} at line {line}, column {column} is not a residue mod {p}")]
    CoefficientOutOfField {
        value: String,
        p: u32,
        line: usize,
        column: usize,
    },
    #[error("dimension estimate is not stable")]
    UnstableEstimate,
    #[error("point is not on the variety")]
    NotOnVariety,
    #[error("matrix is not in the tangent space")]
    NotInTangentSpace,
    #[error("no matrix of rank {rank} found within {attempts} samples")]
    NoPointFound { rank: usize, attempts: u64 },
    #[error("tensor of dims {dims:?} over q = {q} is outside the exact slice-rank scope")]
    OutOfExactScope { dims: [usize; 3], q: u32 },
    #[error("decomposition failed verification")]
    VerificationFailed,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
