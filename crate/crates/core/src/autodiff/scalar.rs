use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;

/// Arithmetic needed to evaluate networks, residuals and losses generically,
/// either on plain `f64` or on a recording [`Var`](super::Var).
///
/// `max0`/`min0` use a zero subgradient at the kink.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same context as `self`.
    fn constant_like(&self, c: f64) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    /// `max(x, 0)`.
    fn max0(self) -> Self;
    /// `min(x, 0)`.
    fn min0(self) -> Self;

    fn square(self) -> Self {
        self * self
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn constant_like(&self, c: f64) -> Self {
        c
    }

    #[inline]
    fn tanh(self) -> Self {
        math::tanh(self)
    }

    #[inline]
    fn exp(self) -> Self {
        math::exp(self)
    }

    #[inline]
    fn max0(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }

    #[inline]
    fn min0(self) -> Self {
        if self < 0.0 {
            self
        } else {
            0.0
        }
    }
}
