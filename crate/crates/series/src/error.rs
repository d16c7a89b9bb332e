use thiserror::Error;

/// Errors raised by series and matrix operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    /// Operands live over different variable tables.
    #[error("variable table mismatch: {0}")]
    TableMismatch(String),
    /// A variable name is not present in the table.
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    /// A table was declared with a repeated variable name.
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    /// A negative exponent was requested for a non-Laurent variable.
    #[error("negative exponent for non-Laurent variable `{0}`")]
    NegativeExponent(String),
    /// The series (or matrix) has no inverse in the truncated ring.
    #[error("inversion failed: {0}")]
    Inversion(String),
    /// A substitution would not respect truncation.
    #[error("unsound substitution: {0}")]
    Substitution(String),
    /// Matrix shapes are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A linear system has no solution.
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}
