//! Weighted hypergraph machinery for corners in dense subsets of `P^d`:
//! Green–Tao measures, independent weight systems, weighted Gowers box norms,
//! dual functions and the corner-counting multilinear form, plus an
//! experiment harness that checks the associated inequalities numerically.

pub mod arithmetic;
pub mod corners;
pub mod error;
pub mod gowers;
pub mod grid;
pub mod par;
pub mod rng;
pub mod verification;
pub mod weights;

pub use error::{Error, Result};

/// Version string embedded in every report.
pub const REPORT_VERSION: &str = concat!("gowers-lab/", env!("CARGO_PKG_VERSION"));
