//! Exact truncated multivariate Laurent and power series over the rationals.
//!
//! Every series lives over a [`VarTable`] of named, weighted variables and
//! carries one degree cap per variable. Coefficients are arbitrary-precision
//! rationals; nothing in this crate rounds.

mod error;
mod matrix;
mod qmatrix;
mod rational;
mod series;
mod table;

pub use error::SeriesError;
pub use matrix::SeriesMatrix;
pub use qmatrix::QMatrix;
pub use rational::{binomial, factorial, harmonic, parse_rational, q, qi, Rational};
pub use series::{Monomial, Series, NO_CAP};
pub use table::{Var, VarTable};

/// Result alias for fallible series operations.
pub type Result<T> = std::result::Result<T, SeriesError>;
