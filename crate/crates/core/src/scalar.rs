//! Scalar abstractions.
//!
//! [`Ring`] is what polynomial arithmetic needs; [`Coefficient`] adds
//! division and a conversion to doubles (floats or exact rationals). [`Real`] adds the floating point operations needed for
//! evaluation, root finding and the Riemann-surface machinery.

use std::fmt::{Debug, Display};
use std::ops::{Neg, Sub};

use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Commutative ring with identity: enough for polynomial arithmetic and
/// evaluation.
pub trait Ring:
    Clone + Debug + PartialEq + Zero + One + Sub<Output = Self> + Neg<Output = Self> + Send + Sync
{
}

impl<T> Ring for T where
    T: Clone + Debug + PartialEq + Zero + One + Sub<Output = T> + Neg<Output = T> + Send + Sync
{
}

/// Field of polynomial coefficients with a conversion to doubles.
pub trait Coefficient: Ring + Num {
    /// Exact conversion from a double, `None` for non-finite input.
    fn from_f64_exact(x: f64) -> Option<Self>;
    fn to_f64_lossy(&self) -> f64;
    fn magnitude(&self) -> f64 {
        self.to_f64_lossy().abs()
    }
}

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + Coefficient + Display + Default + Copy + Send + Sync + 'static
{
    /// Literal conversion; panics only if `x` is not representable, which
    /// never happens for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }
}

impl Coefficient for f64 {
    fn from_f64_exact(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Coefficient for f32 {
    fn from_f64_exact(x: f64) -> Option<Self> {
        let y = x as f32;
        (y.is_finite() && y as f64 == x).then_some(y)
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Real for f64 {}
impl Real for f32 {}

impl Coefficient for BigRational {
    fn from_f64_exact(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64_lossy()
    }
}

