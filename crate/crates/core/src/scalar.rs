//! Scalar abstraction: every solver and the simulator are generic over a
//! floating-point type so the same code runs at f32 or f64 precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used for costs, altitudes, pheromone levels,
/// congestion indices and simulated time.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + FromStr
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Conversion from f64, for constants and config plumbing.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 value converts to scalar")
    }

    /// Widening (or identity) conversion to f64, for reporting.
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + FromStr
        + Display
        + Debug
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_float_widths_satisfy_the_trait() {
        fn takes<F: Scalar>(v: F) -> f64 {
            v.as_f64()
        }
        assert_eq!(takes(1.5f32), 1.5);
        assert_eq!(takes(1.5f64), 1.5);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::of(0.25), 0.25f64);
    }
}
