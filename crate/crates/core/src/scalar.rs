//! Scalar abstraction shared by the linear-algebra layer.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable for operators, spectra and flip paths.
///
/// Implemented for `f32` and `f64`. The bound deliberately stays on
/// `RealField` for arithmetic so that `sqrt`, `abs`, `exp` and friends
/// resolve without ambiguity; conversions go through num-traits.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Scalar>(x: f64) -> f64 {
        T::lit(x).as_f64()
    }

    #[test]
    fn conversions() {
        assert_eq!(roundtrip::<f64>(0.1), 0.1);
        assert!((roundtrip::<f32>(0.1) - 0.1).abs() < 1e-7);
        assert_eq!(f64::from_count(7), 7.0);
    }
}
