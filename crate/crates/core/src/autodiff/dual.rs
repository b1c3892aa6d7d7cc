use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::{primal_sign, Scalar};

/// First-order dual number `primal + tangent·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub primal: f64,
    pub tangent: f64,
}

impl Dual {
    pub const fn new(primal: f64, tangent: f64) -> Self {
        Self { primal, tangent }
    }

    pub const fn constant(primal: f64) -> Self {
        Self::new(primal, 0.0)
    }

    pub const fn variable(primal: f64) -> Self {
        Self::new(primal, 1.0)
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        Self::new(f, df * self.tangent)
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.primal + rhs.primal, self.tangent + rhs.tangent)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.primal - rhs.primal, self.tangent - rhs.tangent)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.primal * rhs.primal,
            self.primal * rhs.tangent + self.tangent * rhs.primal,
        )
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.primal;
        let q = self.primal * inv;
        Self::new(q, (self.tangent - q * rhs.tangent) * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.primal, -self.tangent)
    }
}

impl Add<f64> for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self::new(self.primal + rhs, self.tangent)
    }
}

impl Sub<f64> for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self::new(self.primal - rhs, self.tangent)
    }
}

impl Mul<f64> for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.primal * rhs, self.tangent * rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Self::new(self.primal / rhs, self.tangent / rhs)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Scalar for Dual {
    const HAS_TANGENTS: bool = true;

    #[inline]
    fn from_f64(x: f64) -> Self {
        Self::constant(x)
    }
    #[inline]
    fn primal(&self) -> f64 {
        self.primal
    }
    #[inline]
    fn is_finite(&self) -> bool {
        self.primal.is_finite() && self.tangent.is_finite()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.primal.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.primal.exp();
        self.chain(e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.primal.ln(), 1.0 / self.primal)
    }
    #[inline]
    fn sin(self) -> Self {
        self.chain(self.primal.sin(), self.primal.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.chain(self.primal.cos(), -self.primal.sin())
    }
    #[inline]
    fn abs(self) -> Self {
        let s = primal_sign(self.primal);
        Self::new(self.primal.abs(), s * self.tangent)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let r2 = x.primal * x.primal + self.primal * self.primal;
        Self::new(
            self.primal.atan2(x.primal),
            (x.primal * self.tangent - self.primal * x.tangent) / r2,
        )
    }
    #[inline]
    fn recip(self) -> Self {
        let inv = 1.0 / self.primal;
        self.chain(inv, -inv * inv)
    }
}
