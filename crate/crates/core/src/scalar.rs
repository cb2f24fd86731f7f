//! Scalar abstraction for the numeric core.
//!
//! Geometry, learners, and evaluation are generic over [`Scalar`] so the
//! same code runs in `f32` or `f64`. The pipeline itself is pinned to
//! [`crate::Real`] (`f64`); the generic layer exists so precision can be
//! traded off without touching the math.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from `f64` literals and counts.
    fn from_f64_lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lit(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    fn half() -> Self {
        Self::from_f64_lit(0.5)
    }

    fn two() -> Self {
        Self::from_f64_lit(2.0)
    }

    /// Logistic sigmoid, computed in a form stable for large |x|.
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    /// Inverse of [`Scalar::sigmoid`].
    fn logit(self) -> Self {
        (self / (Self::one() - self)).ln()
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_logit_inverse() {
        for &p in &[1e-6, 0.25, 0.5, 0.75, 1.0 - 1e-6] {
            let z = f64::logit(p);
            assert!((z.sigmoid() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_stable_at_extremes() {
        assert_eq!(f64::sigmoid(800.0), 1.0);
        assert_eq!(f64::sigmoid(-800.0), 0.0);
        assert!(f32::sigmoid(80.0f32) <= 1.0);
    }
}
