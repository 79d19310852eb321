//! Scalar abstractions.
//!
//! Floating-point algorithms are written against [`Real`], which is satisfied
//! by `f32` and `f64`. Exact algorithms work over any [`Field`]; in practice
//! that is [`Rational`](crate::Rational).

use std::fmt::{Debug, Display};
use std::ops::Neg;

use nalgebra::RealField;
use num_traits::{Num, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + ToPrimitive + Display + Send + Sync + 'static {
    /// Relative tolerance used for numerical rank decisions.
    fn rank_tol() -> Self;

    /// Tolerance used when checking that a matrix has orthonormal columns.
    fn orthonormal_tol() -> Self;
}

impl Real for f32 {
    fn rank_tol() -> Self {
        1e-5
    }

    fn orthonormal_tol() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn rank_tol() -> Self {
        1e-9
    }

    fn orthonormal_tol() -> Self {
        1e-8
    }
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts `x` to `f64`, mapping anything unrepresentable to NaN.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// An exact field (no rounding): rationals, or anything else that behaves
/// like one.
pub trait Field: Clone + Num + Neg<Output = Self> + PartialEq + Debug {}

impl<F> Field for F where F: Clone + Num + Neg<Output = F> + PartialEq + Debug {}
