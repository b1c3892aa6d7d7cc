use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use super::Scalar;

/// Complex number whose real and imaginary parts are any [`Scalar`].
///
/// Derivatives flow through the parts, so differentiating a real function
/// of real parameters through complex intermediates needs no extra rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Complex<S> {
    pub fn new(re: S, im: S) -> Self {
        Self { re, im }
    }

    pub fn from_real(re: S) -> Self {
        Self { re, im: S::zero() }
    }

    pub fn zero() -> Self {
        Self::from_real(S::zero())
    }

    pub fn one() -> Self {
        Self::from_real(S::one())
    }

    /// `i·x` for a real `x`.
    pub fn imag(x: S) -> Self {
        Self {
            re: S::zero(),
            im: x,
        }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// `|z|² = re² + im²`, branch free.
    pub fn norm_sqr(self) -> S {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> S {
        self.norm_sqr().sqrt()
    }

    pub fn recip(self) -> Self {
        let d = self.norm_sqr();
        Self::new(self.re / d, -self.im / d)
    }

    pub fn scale(self, k: S) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    /// Multiplies by `i`.
    pub fn mul_i(self) -> Self {
        Self::new(-self.im, self.re)
    }

    /// Primal parts as a plain complex pair.
    pub fn primal(self) -> (f64, f64) {
        (self.re.primal(), self.im.primal())
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<S: Scalar> Add for Complex<S> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self::new(self.re + r.re, self.im + r.im)
    }
}

impl<S: Scalar> AddAssign for Complex<S> {
    #[inline]
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl<S: Scalar> Sub for Complex<S> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self::new(self.re - r.re, self.im - r.im)
    }
}

impl<S: Scalar> Mul for Complex<S> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.re * r.re - self.im * r.im,
            self.re * r.im + self.im * r.re,
        )
    }
}

impl<S: Scalar> Div for Complex<S> {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        let d = r.norm_sqr();
        Self::new(
            (self.re * r.re + self.im * r.im) / d,
            (self.im * r.re - self.re * r.im) / d,
        )
    }
}

impl<S: Scalar> Neg for Complex<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}
