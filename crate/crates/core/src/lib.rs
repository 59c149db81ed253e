//! Critical points of nonsmooth p-Laplacian energy functionals on periodic
//! meshes: minimization, mountain pass, saddle search, homoclinic window
//! continuation, numerical hypothesis auditing and the scalar p-Laplacian
//! eigenvalue ladder.
//!
//! Everything is generic over the scalar [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision case.

// `!(a > b)` deliberately treats NaN as failing the comparison
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auditor;
pub mod energy;
pub mod error;
pub mod grid_space;
pub mod homoclinic;
pub mod potential;
pub mod real;
pub mod solvers;
pub mod spectrum;
pub mod timefn;

pub use energy::{ProblemSpec, Variant};
pub use error::{PlapError, Result};
pub use grid_space::{GridFn, Mesh};
pub use potential::{Builtin, Potential, SubgradSet};
pub use real::Real;
pub use timefn::TimeFn;

pub type Mesh64 = Mesh<f64>;
pub type GridFn64 = GridFn<f64>;
pub type Builtin64 = Builtin<f64>;
pub type TimeFn64 = TimeFn<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
