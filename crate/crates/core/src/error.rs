//! Error type shared by every module of the workbench.
//!
//! Budget overruns get their own variant so callers (and the CLI exit-code
//! mapping) can tell "the answer is false" from "the search was refused".

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate symbol `{name}` in signature")]
    DuplicateSymbol { name: String },

    #[error("unknown symbol `{name}`")]
    UnknownSymbol { name: String },

    #[error("arity mismatch for `{symbol}`: expected {expected}, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },

    #[error("variable `{name}` is not bound by the assignment or team domain")]
    UnboundVariable { name: String },

    #[error("duplicate variable `{name}` in domain")]
    DuplicateVariable { name: String },

    #[error("value {value} out of range for domain of size {domain}{}", place.as_ref().map(|p| format!(" ({p})")).unwrap_or_default())]
    ValueOutOfRange {
        value: usize,
        domain: usize,
        place: Option<String>,
    },

    #[error("row length {got} does not match domain length {expected}")]
    RowLengthMismatch { expected: usize, got: usize },

    #[error("function `{name}` is not total over its tuple space")]
    FunctionNotTotal { name: String },

    #[error("supplement function mismatch: {detail}")]
    SupplementMismatch { detail: String },

    #[error("empty image set in supplement function")]
    EmptyImage,

    #[error("tuples have unequal lengths in inclusion/exclusion atom")]
    TupleLengthMismatch,

    #[error("substituting for `{var}` would capture it under a quantifier")]
    Capture { var: String },

    #[error("substitution target `{var}` occurs inside a dependency atom; desugar first")]
    AtomSubstitution { var: String },

    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("construct outside the supported fragment: {construct}")]
    FragmentViolation { construct: String },

    #[error("budget exceeded: {what} needs {actual}, limit {limit}")]
    BudgetExceeded {
        what: String,
        limit: u64,
        actual: u64,
    },

    #[error("requires non-principal ultrafilter (infinite index set)")]
    NonPrincipalRequired,

    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },

    #[error("precondition violated: {detail}")]
    PreconditionFailed { detail: String },

    #[error("postcondition check failed: {detail}")]
    PostconditionFailed { detail: String },
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI's JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateSymbol { .. } => "duplicate-symbol",
            Error::UnknownSymbol { .. } => "unknown-symbol",
            Error::ArityMismatch { .. } => "arity-mismatch",
            Error::UnboundVariable { .. } => "unbound-variable",
            Error::DuplicateVariable { .. } => "duplicate-variable",
            Error::ValueOutOfRange { .. } => "value-out-of-range",
            Error::RowLengthMismatch { .. } => "row-length-mismatch",
            Error::FunctionNotTotal { .. } => "function-not-total",
            Error::SupplementMismatch { .. } => "supplement-mismatch",
            Error::EmptyImage => "empty-image",
            Error::TupleLengthMismatch => "tuple-length-mismatch",
            Error::Capture { .. } => "capture",
            Error::AtomSubstitution { .. } => "atom-substitution",
            Error::Syntax { .. } => "syntax",
            Error::FragmentViolation { .. } => "fragment-violation",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::NonPrincipalRequired => "non-principal-required",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::PreconditionFailed { .. } => "precondition-failed",
            Error::PostconditionFailed { .. } => "postcondition-failed",
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
