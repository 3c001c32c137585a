//! Affine processes on the cone of positive semidefinite matrices.
//!
//! Parameter sets, the generalized Riccati equations behind the Laplace
//! transform, the generator, and a regularized Euler scheme with Monte Carlo
//! cross-checks against the Riccati solution.

pub mod error;
pub mod io;
pub mod jumps;
pub mod laplace;
pub mod mc_compare;
pub mod params;
pub mod riccati;
pub mod simulate;
pub mod symcone;

pub use error::{Error, Result};
pub use jumps::{MatrixAtom, MatrixAtomMeasure, ScalarAtom, ScalarAtomMeasure};
pub use params::{AffineParams, LinearDrift};
pub use symcone::{EigenDecomp, SymMat};
