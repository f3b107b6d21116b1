//! Floating-point scalar abstraction.
//!
//! Everything in the crate is generic over [`Scalar`], implemented for `f32`
//! and `f64`. Tolerances quoted in the docs are for `f64`; the `f32` build
//! uses the same code paths with proportionally looser defaults.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Copy
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Default absolute tie tolerance: `1e-9` in `f64`, a few thousand ulps in `f32`.
#[inline]
pub fn default_tol<T: Scalar>() -> T {
    let floor = T::epsilon() * lit(1e3);
    let base = lit::<T>(1e-9);
    if base > floor {
        base
    } else {
        floor
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm_sq<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum()
}

pub(crate) fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Numerically stable `log(sum(exp(v)))`, returning the maximum too.
pub(crate) fn log_sum_exp<T: Scalar>(v: &[T]) -> (T, T) {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return (m, m);
    }
    let s: T = v.iter().map(|&x| (x - m).exp()).sum();
    (m + s.ln(), m)
}

/// `ln(n!)`.
pub(crate) fn ln_factorial<T: Scalar>(n: usize) -> T {
    (2..=n).map(|k| count::<T>(k).ln()).sum()
}
