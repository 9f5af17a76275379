//! Numerical Wold-type decompositions for covariant representations of
//! finite-dimensional correspondences and product systems.
//!
//! Operators are dense complex matrices, subspaces are orthonormal frames,
//! and every decomposition comes with residuals that quantify how well the
//! computed pieces satisfy the defining identities.

pub mod cli;
pub mod error;
pub mod hypotheses;
pub mod linalg;
pub mod report;
pub mod repn;
pub mod structure;
pub mod wold;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, Frame, ToleranceConfig};
pub use report::{CheckReport, Witness};
