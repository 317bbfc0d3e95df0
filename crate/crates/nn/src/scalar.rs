use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssignOps, NumCast, ToPrimitive};
use rand::distr::uniform::SampleUniform;

/// Floating-point scalar the engine is generic over.
///
/// Bounds cover everything the layers need: IEEE float math, compound
/// assignment, iterator sums, uniform sampling, and thread safety. The two
/// conversion helpers let hyperparameters stay plain `f64` in public APIs.
pub trait Scalar:
    Float + NumAssignOps + Sum + SampleUniform + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 constant representable as scalar")
    }

    /// Widens this scalar to `f64` for reporting and cross-type checks.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_f64() {
        assert_eq!(f64::from_f64(1.5), 1.5);
        assert_eq!(1.5f64.as_f64(), 1.5);
    }

    #[test]
    fn narrows_to_f32() {
        let x = f32::from_f64(0.25);
        assert_eq!(x, 0.25f32);
        assert_eq!(x.as_f64(), 0.25);
    }
}
