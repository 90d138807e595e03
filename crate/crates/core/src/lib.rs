//! Relative entropy of resource for finite-dimensional quantum states.
//!
//! The crate computes `D_F(rho) = inf_{sigma in F} D(rho || sigma)` for
//! entanglement-type free sets, certifies it from both sides through a
//! dual formula, and evaluates energy-constrained continuity bounds.

pub mod ecbounds;
pub mod entropy;
pub mod error;
pub mod freesets;
pub mod gaussian;
pub mod io;
pub mod opcore;
pub mod random;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use opcore::HermitianOp;
