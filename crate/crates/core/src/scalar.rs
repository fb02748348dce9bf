//! Scalar abstraction shared by the transform, codec and analytic-model layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the numeric core is written against: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine-scale tolerance used when checking that a value is integral.
    #[inline]
    fn integral_slack() -> Self {
        Self::epsilon() * Self::of(64.0)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion() {
        assert_eq!(<f64 as Scalar>::of(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::of(0.25), 0.25f32);
        assert_eq!(<f32 as Scalar>::of(1.5).to_f64_lossy(), 1.5);
    }
}
