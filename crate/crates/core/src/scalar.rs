//! Floating-point abstraction the rest of the crate is generic over.
//!
//! Everything numeric is written against [`Real`], which any IEEE float
//! with the usual trait surface satisfies. The crate root exports `f64`
//! aliases of the main types; `f32` works too, with correspondingly
//! looser attainable tolerances.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Scalar type for all physics quantities: `f32` or `f64` (or anything
/// float-like that implements the same traits).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`. Panics only if `T` cannot represent
/// ordinary finite constants, which no supported scalar triggers.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert to scalar type")
}

/// `e^{i theta}` as a complex number.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// The imaginary unit.
#[inline]
pub fn i<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Zero as a complex number.
#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}
