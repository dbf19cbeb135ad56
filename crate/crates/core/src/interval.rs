use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues this close to an endpoint count as inside.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Closed energy window `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T: Scalar> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// `[center − half_width, center + half_width]`.
    pub fn centered(center: T, half_width: T) -> Result<Self> {
        if !(half_width >= T::zero()) {
            return Err(Error::Domain(format!("negative half width {half_width}")));
        }
        Self::new(center - half_width, center + half_width)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn half_width(&self) -> T {
        self.width() / T::lit(2.0)
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn contains(&self, x: T) -> bool {
        let tol = T::lit(ENDPOINT_TOL);
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Number of values inside the window.
    pub fn count(&self, values: &[T]) -> usize {
        values.iter().filter(|v| self.contains(**v)).count()
    }

    pub fn to_f64(&self) -> Interval<f64> {
        Interval {
            lo: self.lo.as_f64(),
            hi: self.hi.as_f64(),
        }
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
