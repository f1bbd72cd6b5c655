//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the core algorithms are written against (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal; infallible for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// Relative nudge applied to critical radii so that the strict ball
    /// inequality `rho < r` admits the point at distance exactly `d`.
    fn radius_nudge() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(128.0))
    }

    /// Relative tolerance used to stop bisections and golden-section searches.
    fn solver_tol() -> Self {
        Self::lit(1e-13).max(Self::epsilon() * Self::lit(8.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `p' = p / (p - 1)`.
#[inline]
pub fn conjugate<T: Real>(p: T) -> T {
    p / (p - T::one())
}

/// `a` and `b` agree to relative tolerance `tol` (absolute near zero).
pub fn rel_close<T: Real>(a: T, b: T, tol: T) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= tol * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nudge_survives_in_single_precision() {
        let d = 0.3_f32;
        assert!(d < d * (1.0 + f32::radius_nudge()));
        assert_eq!(f64::radius_nudge(), 1e-9);
    }

    #[test]
    fn conjugate_exponent() {
        assert_eq!(conjugate(2.0_f64), 2.0);
        assert!((conjugate(3.0_f64) - 1.5).abs() < 1e-15);
    }
}
