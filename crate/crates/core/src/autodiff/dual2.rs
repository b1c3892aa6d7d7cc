use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::{primal_sign, Scalar};

/// Tangent-over-tangent dual number `v + a·ε₁ + b·ε₂ + c·ε₁ε₂` with
/// `ε₁² = ε₂² = 0`.
///
/// Seeding `x_i` with `tangent1 = 1` and `x_j` with `tangent2 = 1` makes
/// `cross` of the result equal `∂²f/∂x_i∂x_j`, while `tangent1` carries
/// `∂f/∂x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual2 {
    pub primal: f64,
    pub tangent1: f64,
    pub tangent2: f64,
    pub cross: f64,
}

impl Dual2 {
    pub const fn new(primal: f64, tangent1: f64, tangent2: f64, cross: f64) -> Self {
        Self {
            primal,
            tangent1,
            tangent2,
            cross,
        }
    }

    pub const fn constant(primal: f64) -> Self {
        Self::new(primal, 0.0, 0.0, 0.0)
    }

    /// Applies a scalar function with value `f`, first derivative `df` and
    /// second derivative `d2f` at the primal.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self::new(
            f,
            df * self.tangent1,
            df * self.tangent2,
            df * self.cross + d2f * self.tangent1 * self.tangent2,
        )
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self::new(
            self.primal + r.primal,
            self.tangent1 + r.tangent1,
            self.tangent2 + r.tangent2,
            self.cross + r.cross,
        )
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self::new(
            self.primal - r.primal,
            self.tangent1 - r.tangent1,
            self.tangent2 - r.tangent2,
            self.cross - r.cross,
        )
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.primal * r.primal,
            self.tangent1 * r.primal + self.primal * r.tangent1,
            self.tangent2 * r.primal + self.primal * r.tangent2,
            self.cross * r.primal
                + self.tangent1 * r.tangent2
                + self.tangent2 * r.tangent1
                + self.primal * r.cross,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        self * r.recip()
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.primal, -self.tangent1, -self.tangent2, -self.cross)
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, r: f64) -> Self {
        Self::new(self.primal + r, self.tangent1, self.tangent2, self.cross)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, r: f64) -> Self {
        Self::new(self.primal - r, self.tangent1, self.tangent2, self.cross)
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, r: f64) -> Self {
        Self::new(
            self.primal * r,
            self.tangent1 * r,
            self.tangent2 * r,
            self.cross * r,
        )
    }
}

impl Div<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, r: f64) -> Self {
        self * (1.0 / r)
    }
}

impl AddAssign for Dual2 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dual2 {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Scalar for Dual2 {
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
        self.primal.is_finite()
            && self.tangent1.is_finite()
            && self.tangent2.is_finite()
            && self.cross.is_finite()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.primal.sqrt();
        let d = 0.5 / s;
        self.chain(s, d, -0.5 * d / self.primal)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.primal.exp();
        self.chain(e, e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        let inv = 1.0 / self.primal;
        self.chain(self.primal.ln(), inv, -inv * inv)
    }
    #[inline]
    fn sin(self) -> Self {
        let (s, c) = self.primal.sin_cos();
        self.chain(s, c, -s)
    }
    #[inline]
    fn cos(self) -> Self {
        let (s, c) = self.primal.sin_cos();
        self.chain(c, -s, -c)
    }
    #[inline]
    fn abs(self) -> Self {
        let s = primal_sign(self.primal);
        Self::new(
            self.primal.abs(),
            s * self.tangent1,
            s * self.tangent2,
            s * self.cross,
        )
    }
    fn atan2(self, x: Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x² + y²); differentiate that
        // quotient once more along the second direction for the cross term.
        let (y, yv, xv) = (self, self.primal, x.primal);
        let r2 = xv * xv + yv * yv;
        let num1 = xv * y.tangent1 - yv * x.tangent1;
        let num2 = xv * y.tangent2 - yv * x.tangent2;
        let dnum1_2 =
            x.tangent2 * y.tangent1 + xv * y.cross - y.tangent2 * x.tangent1 - yv * x.cross;
        let dr2_2 = 2.0 * (xv * x.tangent2 + yv * y.tangent2);
        Self::new(
            yv.atan2(xv),
            num1 / r2,
            num2 / r2,
            (dnum1_2 * r2 - num1 * dr2_2) / (r2 * r2),
        )
    }
    #[inline]
    fn recip(self) -> Self {
        let inv = 1.0 / self.primal;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}
