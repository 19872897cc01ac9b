//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Real floating-point scalar the simulation is generic over (`f32` or `f64`).
///
/// `FftNum` brings `Signed` into scope alongside `Float`, so `abs`/`signum`
/// must be called through `Float::` explicitly.
pub trait Real:
    FftNum + Float + FloatConst + FromPrimitive + NumAssign + Display + LowerExp + Default + Debug
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Converts to `f64` for reporting and error payloads.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Smallest total weight treated as a possible event.
    ///
    /// `1e-300` for `f64`; for narrower types the smallest positive normal value.
    #[inline]
    fn dark_floor() -> Self {
        let floor = Self::lit(1e-300);
        if floor > Self::zero() {
            floor
        } else {
            Self::min_positive_value()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
