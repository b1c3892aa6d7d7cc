//! Derivative engines for scalar fields over parameter vectors.
//!
//! Model code is written once against the [`Scalar`] trait and evaluated with
//! plain `f64`, first-order [`Dual`] numbers, or second-order [`Dual2`]
//! numbers. Complex intermediates use [`Complex<S>`], i.e. complex numbers
//! whose parts are duals. Central finite differences are provided as an
//! independent engine over plain `f64` closures.

mod complex;
mod dual;
mod dual2;
mod engines;

pub use complex::Complex;
pub use dual::Dual;
pub use dual2::Dual2;
pub use engines::{
    dual2_grad_hessian, dual2_hessian, dual_gradient, fd_gradient, fd_gradient_scaled, fd_hessian,
    fd_hessian_scaled, fd_step, Engine, FD_FLOOR_THRESHOLD,
};

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::Result;

/// Real scalar usable in model code: `f64` or a forward-mode dual.
///
/// Comparisons and branching must only look at [`Scalar::primal`].
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Whether the type carries derivative components.
    const HAS_TANGENTS: bool;

    fn from_f64(x: f64) -> Self;
    fn primal(&self) -> f64;
    /// True when the primal and every derivative component are finite.
    fn is_finite(&self) -> bool;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    /// Absolute value; the derivative at zero is taken as 0.
    fn abs(self) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self;
        }
        acc
    }
}

impl Scalar for f64 {
    const HAS_TANGENTS: bool = false;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn primal(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// A real-valued function that can be evaluated with any [`Scalar`].
///
/// This is the hook the derivative engines and samplers work through.
pub trait ScalarField: Sync {
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S>;
}

/// Sign of the primal, with `sign(0) = 0`.
#[inline]
pub(crate) fn primal_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
