//! Quantum cohomology of projective local models of simple `(r, r′)` flips.
//!
//! The crate builds the Picard–Fuchs system and the z-free connection
//! matrices of `X`, validates them against the I-function, block
//! diagonalizes the irregular singularity at `q₁ = ∞`, performs the
//! Birkhoff factorization modulo `y` for the `(2,1)` flip and checks the
//! closed-form series and combinatorial identities attached to it.

pub mod bfgmt;
pub mod blockdiag;
pub mod cohring;
pub mod error;
pub mod extremal;
pub mod golden;
pub mod pfsys;
pub mod report;
pub mod verify;

pub use cohring::{CaseTag, CohClass, CohRing, FlipGeometry, Label};
pub use error::{FlipError, Result};
pub use report::{CheckReport, Status};
