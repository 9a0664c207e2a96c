//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar the physics is written against: `f32` or `f64`.
///
/// All tolerances quoted in the documentation assume `f64`; the `f32`
/// instantiation is useful for quick sweeps and plotting only.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion back to `f64` (for reporting and CSV output).
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    /// 2π.
    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type Cx<T> = num_complex::Complex<T>;

/// `i` for the scalar type.
#[inline]
pub(crate) fn imag_unit<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::one())
}

/// Real number promoted to a complex.
#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}
