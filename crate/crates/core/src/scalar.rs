//! Numeric abstractions.
//!
//! The dynamic programs only need ring operations, so they are written
//! against [`Weight`] and run unchanged over `f32`, `f64` and exact
//! rationals. Anything that needs square roots (cosine similarity, Gram
//! normalization, the SVM solver) requires the floating [`Scalar`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Ring-like value accumulated by the any-gram dynamic programs.
pub trait Weight:
    Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + PartialOrd + Debug + Send + Sync
{
}

impl<T> Weight for T where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + PartialOrd + Debug + Send + Sync
{
}

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Weight
    + Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + LowerExp
    + Sum
    + Serialize
    + DeserializeOwned
    + Default
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
