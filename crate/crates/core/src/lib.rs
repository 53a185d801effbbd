//! Accelerated Frank-Wolfe methods.
//!
//! An approximated-FISTA outer loop ([`accel`]) whose prox subproblems are
//! solved by projection-free inner solvers ([`inner`]): away-step
//! Frank-Wolfe on polytopes, or a sparse projection with a Frank-Wolfe
//! fallback. The [`oracles`] module provides linear optimization, exact
//! projection and sparse projection for the simplex, the l1 ball,
//! vertex-listed polytopes, the spectrahedron and the nuclear-norm ball.
//! [`instance`] generates quadratic test problems with a planted optimum
//! and [`harness`] runs seeded experiment grids and writes CSV traces.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// Parameter checks are written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod error;
pub mod harness;
pub mod inner;
pub mod instance;
pub mod objective;
pub mod oracles;
pub mod reference;
pub mod scalar;
pub mod trace;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense `f64` point.
pub type Point = scalar::Point<f64>;
pub type FeasibleSet = oracles::FeasibleSet<f64>;
pub type QuadraticObjective = objective::QuadraticObjective<f64>;
pub type QuadraticInstance = instance::QuadraticInstance<f64>;
pub type InnerSubproblem = accel::InnerSubproblem<f64>;
pub type Schedule = accel::Schedule<f64>;
pub type AfistaConfig = accel::AfistaConfig<f64>;
pub type ActiveSet = inner::ActiveSet<f64>;
pub type InnerResult = inner::InnerResult<f64>;
pub type RunOutcome = trace::RunOutcome<f64>;
