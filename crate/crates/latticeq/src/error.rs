//! Crate-wide error type.
//!
//! Variants are grouped by failure class so frontends can map them onto
//! stable exit codes: construction/precondition violations, divisibility
//! failures, parse errors (with source locations), and I/O.

use thiserror::Error;

/// Location of a parse failure inside a DSL source string, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for SourcePos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("universe size must be a positive even integer, got {0}")]
    OddUniverse(u64),

    #[error("gcd(h_n, n) must be 1 for Fourier orthonormality, got h_n={h_n}, n={n}")]
    NonCoprimePlanck { h_n: u64, n: u64 },

    #[error("lattice point {k} outside [-{half}, {half})")]
    PointOutOfRange { k: i64, half: i64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("divisibility failure: {0}")]
    Divisibility(String),

    #[error("window [{m1}, {m2}] invalid: {reason}")]
    Window { m1: f64, m2: f64, reason: String },

    #[error("universe too small for local quantification (max window is 0)")]
    DegenerateUniverse,

    #[error("arity mismatch: form has {expected} variables, point has {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("kernel caustic: {0}")]
    Caustic(String),

    #[error("summation cost {estimated} terms exceeds ceiling {ceiling}")]
    CostGuard { estimated: u64, ceiling: u64 },

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: SourcePos, msg: String },

    #[error("unknown identifier '{name}' at {pos}")]
    UnknownIdentifier { name: String, pos: SourcePos },

    #[error("non-integer exponent at {pos}")]
    NonIntegerExponent { pos: SourcePos },

    #[error("division by a non-literal expression at {pos}")]
    DivisionByNonLiteral { pos: SourcePos },

    #[error("division by zero at {pos}")]
    DivisionByZero { pos: SourcePos },

    #[error("expression too large: {0}")]
    ExpressionTooLarge(String),

    #[error("unbound variable '{0}' during evaluation")]
    UnboundVariable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Serialization(String),
}

impl Error {
    /// True for errors that should map to a "parse error" exit status.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownIdentifier { .. }
                | Error::NonIntegerExponent { .. }
                | Error::DivisionByNonLiteral { .. }
                | Error::DivisionByZero { .. }
                | Error::ExpressionTooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
