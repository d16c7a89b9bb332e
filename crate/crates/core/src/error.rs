use flipqh_series::SeriesError;
use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum FlipError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    /// Invalid `(r, r′)` or an operation undefined for the geometry.
    #[error("geometry: {0}")]
    Geometry(String),
    /// A structural invariant failed (z-dependence, negative powers, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A check needs more terms than the configured caps provide.
    #[error("insufficient truncation: {0}")]
    Truncation(String),
    /// The pseudo-inverse met a term that would need a logarithm.
    #[error("integration: {0}")]
    Integration(String),
    /// A degree-by-degree solve found no solution.
    #[error("obstruction: {0}")]
    Obstruction(String),
}

pub type Result<T> = std::result::Result<T, FlipError>;
