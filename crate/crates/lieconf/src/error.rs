//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("iteration cap reached during {0}")]
    IterationCap(&'static str),
    #[error("the eigen-polynomial system needs a field extension (irrational characteristic factor {cofactor})")]
    NeedsFieldExtension { cofactor: String },
    #[error("no weight vector found in {context} within the degree cap")]
    NoWeightVector { context: String, extension: bool },
    #[error("degree-cap escalation exhausted during {0}; result is a lower bound")]
    CapExhausted(&'static str),
    #[error("submodule is not stable under the action: {0}")]
    NotStable(String),
    #[error("invalid action table: {0}")]
    InvalidAction(String),
    #[error("verified postcondition failed: {0}")]
    Invariant(String),
    #[error("the subalgebra generated by the element is not solvable")]
    NotSolvable,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("candidate budget exhausted during {0}")]
    BudgetExhausted(String),
    #[error("product index {n} is outside the declared window of the product table")]
    OutsideWindow { n: i64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
}

impl From<crate::textio::ParseError> for Error {
    fn from(e: crate::textio::ParseError) -> Self {
        Error::Syntax { line: e.line, col: e.col, message: e.message }
    }
}

impl Error {
    /// Process exit code the command line tool maps this error to:
    /// 3 for cap/budget exhaustion, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExhausted(_)
            | Error::BudgetExhausted(_)
            | Error::IterationCap(_)
            | Error::OutsideWindow { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
