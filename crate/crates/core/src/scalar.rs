//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Arithmetic and elementary functions come from [`RealField`]; conversions
/// to and from `f64` literals come from `num_traits`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Element of the ambient space. Vector domains use `n x 1` matrices,
/// matrix domains use `m x n` matrices; inner products are Frobenius.
pub type Point<T> = DMatrix<T>;

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Absolute feasibility tolerance: `1e-9` in double precision, loosened
/// for single precision where `1e-9` is below the rounding floor.
pub fn feas_tol<T: Real>() -> T {
    let eps = to_f64(T::default_epsilon());
    lit(1e-9_f64.max(1e3 * eps))
}

/// Relative zero tolerance for support and rank counting.
pub fn zero_tol<T: Real>() -> T {
    let eps = to_f64(T::default_epsilon());
    lit(1e-9_f64.max(10.0 * eps))
}

/// Column vector from a slice of `f64` values.
pub fn column<T: Real>(values: &[f64]) -> Point<T> {
    DMatrix::from_iterator(values.len(), 1, values.iter().map(|&v| lit(v)))
}

pub fn is_finite<T: Real>(x: &Point<T>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// In-place `self += alpha * x` for points of any shape.
pub trait AddScaled<T: Real> {
    fn add_scaled(&mut self, alpha: T, x: &Point<T>);
}

impl<T: Real> AddScaled<T> for Point<T> {
    fn add_scaled(&mut self, alpha: T, x: &Point<T>) {
        self.zip_apply(x, |a, b| *a += alpha * b);
    }
}
