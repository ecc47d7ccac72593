//! Closed-form prediction of how much the optimal value of an equality-constrained
//! least-norm or least-distance problem grows when new constraints arrive.
//!
//! Given the solution `x*` and covariance `Cov(x*)` of the problem built from the
//! constraints seen so far, the increase caused by new constraints `A₂x = b₂` is
//!
//! ```text
//! Δf = (A₂x* − b₂)ᵀ [A₂ Cov(x*) A₂ᵀ]⁻¹ (A₂x* − b₂)
//! ```
//!
//! which is exact for linear problems and a linearization for problems on
//! manifolds. The crate provides the linear solvers ([`leastnorm`], [`leastdist`]),
//! SE(3) primitives ([`liegroup`]), a generic manifold solver and predictor
//! ([`nlpredict`]), the two-trajectory alignment application ([`trajectory`]), and
//! the sweep/benchmark harness behind the `ofc` command ([`bench`]).

pub mod bench;
pub mod error;
pub mod leastdist;
pub mod leastnorm;
pub mod liegroup;
pub mod linalg;
pub mod nlpredict;
pub mod trajectory;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
