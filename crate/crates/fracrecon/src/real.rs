//! Scalar abstraction for the whole toolkit.
//!
//! Every numerical routine in this crate is generic over [`Real`], which is
//! satisfied by `f32` and `f64`. Concrete aliases for the common `f64`
//! instantiation live at the crate root.

use num_traits::{Float, FromPrimitive, NumAssign, Signed};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + Signed
    + Sum<Self>
    + Debug
    + Display
    + LowerExp
    + Copy
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + Signed
        + Sum<T>
        + Debug
        + Display
        + LowerExp
        + Copy
        + Send
        + Sync
        + 'static
{
}

/// Shorthand conversion from an `f64` literal into the working scalar.
#[inline]
pub fn r<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant must be representable in the scalar type")
}

/// π in the working scalar.
#[inline]
pub fn pi<R: Real>() -> R {
    r(std::f64::consts::PI)
}
