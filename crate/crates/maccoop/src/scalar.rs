//! Scalar abstraction for all numeric code in the crate.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything probabilistic in this crate (transition tensors, error
/// matrices, entropies, bounds) is generic over this trait. Conversions from
/// integer counts go through `from_usize`; reports convert to `f64` once at
/// the serialization boundary.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from a usize count.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    /// Conversion from an `f64` constant.
    fn of_f64(value: f64) -> Self {
        Self::from_f64(value).expect("constant representable in scalar type")
    }

    /// `log2(x)` with the convention `0 log 0 = 0` used by entropies.
    fn xlog2x(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.log2()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xlog2x_handles_zero_and_powers_of_two() {
        assert_eq!(0.0f64.xlog2x(), 0.0);
        assert_eq!(1.0f64.xlog2x(), 0.0);
        assert_eq!(2.0f64.xlog2x(), 2.0);
        assert_eq!(0.5f64.xlog2x(), -0.5);
    }

    #[test]
    fn works_for_f32_too() {
        assert!((0.5f32.xlog2x() + 0.5).abs() < 1e-6);
    }
}
