//! Numerical study of the hinged-beam eigenproblem `u'''' = μ m(t) u` with
//! a sign-changing weight, the nodal structure of its eigenfunctions, and
//! the unilateral solution branches of nonlinear perturbations.
//!
//! Everything is generic over the scalar type through [`Real`]; the
//! aliases below fix it to `f64` or `f32`.

pub mod analysis;
pub mod continuation;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linops;
pub mod nodal;
pub mod nonlinear;
pub mod scalar;
pub mod shooting;
pub mod spectrum;
pub mod verify;
pub mod weights;

pub use error::{Error, ErrorClass, Result};
pub use nodal::Sign;
pub use scalar::Real;
pub use weights::Weight;

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type SampledFn64 = grid::SampledFn<f64>;
pub type SampledFn32 = grid::SampledFn<f32>;
pub type EigenPair64 = spectrum::EigenPair<f64>;
pub type SpectrumResult64 = spectrum::SpectrumResult<f64>;
pub type NodalProfile64 = nodal::NodalProfile<f64>;
pub type ProblemSpec64 = nonlinear::ProblemSpec<f64>;
pub type Branch64 = continuation::Branch<f64>;
pub type BranchPoint64 = continuation::BranchPoint<f64>;
