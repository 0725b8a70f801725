use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the filters are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Relative threshold below which a triangular pivot counts as zero.
    fn rank_tolerance() -> Self;
}

impl Scalar for f32 {
    fn rank_tolerance() -> Self {
        // 1e-14 is below f32 resolution; scale from epsilon instead.
        45.0 * f32::EPSILON
    }
}

impl Scalar for f64 {
    fn rank_tolerance() -> Self {
        1e-14
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}
