//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the solvers are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Allowed deviation of a row norm from one before a row is treated as non-unit.
    const UNIT_NORM_TOL: Self;
    /// Row norms below this are rejected as zero rows.
    const ZERO_ROW_TOL: Self;

    /// Converts an `f64` literal, saturating to infinity when out of range.
    fn lit(v: f64) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const UNIT_NORM_TOL: f64 = 1e-12;
    const ZERO_ROW_TOL: f64 = 1e-14;

    #[inline]
    fn lit(v: f64) -> f64 {
        v
    }
}

impl Scalar for f32 {
    const UNIT_NORM_TOL: f32 = 1e-5;
    const ZERO_ROW_TOL: f32 = 1e-7;

    #[inline]
    fn lit(v: f64) -> f32 {
        v as f32
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `‖a − b‖₂`
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// `‖x − truth‖ / ‖truth‖`; falls back to the absolute error when `truth` is zero.
pub fn relative_error<T: Scalar>(x: &[T], truth: &[T]) -> T {
    let denom = norm(truth);
    let err = distance(x, truth);
    if denom > T::zero() {
        err / denom
    } else {
        err
    }
}
