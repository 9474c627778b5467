//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};
use rand::distributions::uniform::SampleUniform;

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances throughout the crate are written for `f64`; `f32` works for
/// evaluation and integration but will not meet the tightest residuals.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + SampleUniform
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

#[inline]
pub(crate) fn usize_as<T: Real>(v: usize) -> T {
    T::from_usize(v).expect("integer representable in scalar type")
}

/// A point (or vector) in the two-dimensional quadrature plane.
pub type Point<T> = [T; 2];

#[inline]
pub(crate) fn norm2<T: Real>(v: Point<T>) -> T {
    v[0].hypot(v[1])
}

#[inline]
pub(crate) fn dist<T: Real>(a: Point<T>, b: Point<T>) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
