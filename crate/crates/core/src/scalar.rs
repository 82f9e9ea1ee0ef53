//! Scalar abstractions.
//!
//! Two levels are used throughout the crate. [`Scalar`] is a commutative ring
//! that embeds the rationals; it is all that exact polynomial and truncated
//! series algebra needs, so it is implemented for `f32`, `f64`, `Ratio<i64>`
//! and for [`Poly`](crate::series::Poly) (series whose coefficients are
//! polynomials in a coupling). [`Real`] adds the transcendental functions
//! required by the flow, saddle and fixed-point solvers.

use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

/// A commutative ring containing the rationals.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Embeds `num / den`. `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

/// Floating-point scalar with the usual elementary functions.
pub trait Real:
    Scalar
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Infallible for the IEEE types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }
        }
        impl Real for $t {}
    )*};
}

impl_float_scalar!(f32, f64);

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}
