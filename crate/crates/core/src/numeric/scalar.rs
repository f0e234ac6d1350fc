//! Complex scalars at two precisions behind one trait.
//!
//! Map evaluation and orbit iteration are written against [`ComplexScalar`]
//! so the same code runs in plain `f64` or in double-double. Everything
//! downstream of an orbit (coordinate changes, fits) works in [`C64`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dd::DoubleDouble;

pub type C64 = Complex64;

/// Global precision mode for orbit computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

pub trait ComplexScalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
    fn zero() -> Self;
    fn one() -> Self;
    fn exp(self) -> Self;
    /// Modulus, rounded to `f64`.
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    fn is_zero(self) -> bool;
    /// `-1/self`, rounded to `f64` after the division.
    fn neg_recip_c64(self) -> C64 {
        (-(Self::one() / self)).to_c64()
    }
}

impl ComplexScalar for C64 {
    #[inline]
    fn from_c64(z: C64) -> Self {
        z
    }
    #[inline]
    fn to_c64(self) -> C64 {
        self
    }
    #[inline]
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    #[inline]
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexDD {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

impl ComplexDD {
    pub fn new(re: DoubleDouble, im: DoubleDouble) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(self) -> DoubleDouble {
        self.re.sqr() + self.im.sqr()
    }

    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    /// `e^{2 pi i t}` for a double-double turn count `t`.
    pub fn cis_turns(t: DoubleDouble) -> Self {
        let (s, c) = (DoubleDouble::TAU * t).sin_cos();
        Self { re: c, im: s }
    }
}

impl From<C64> for ComplexDD {
    fn from(z: C64) -> Self {
        Self {
            re: z.re.into(),
            im: z.im.into(),
        }
    }
}

impl Add for ComplexDD {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexDD {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for ComplexDD {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for ComplexDD {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let d = rhs.norm_sqr();
        let n = self * rhs.conj();
        Self {
            re: n.re / d,
            im: n.im / d,
        }
    }
}

impl Neg for ComplexDD {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl ComplexScalar for ComplexDD {
    fn from_c64(z: C64) -> Self {
        z.into()
    }
    fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        Self {
            re: DoubleDouble::ONE,
            im: DoubleDouble::ZERO,
        }
    }
    fn exp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Self {
            re: m * c,
            im: m * s,
        }
    }
    fn modulus(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn is_zero(self) -> bool {
        self.re.hi == 0.0 && self.im.hi == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_exp_matches_f64_exp() {
        for z in [C64::new(0.3, -1.2), C64::new(-4.0, 7.5), C64::new(1e-6, 1e-6)] {
            let a = ComplexDD::from(z).exp().to_c64();
            let b = z.exp();
            assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm(), "{z}");
        }
    }

    #[test]
    fn dd_division_inverts_multiplication() {
        let a = ComplexDD::from(C64::new(1.5, -0.25));
        let b = ComplexDD::from(C64::new(-0.7, 3.1));
        let back = (a * b) / b;
        let err = (back - a).norm_sqr().sqrt().to_f64();
        assert!(err < 1e-30);
    }

    #[test]
    fn modulus_agrees_with_components() {
        let z = C64::new(3.0, 4.0);
        assert_eq!(z.modulus(), 5.0);
        assert!((z.arg() - (4.0f64).atan2(3.0)).abs() <= 2.0 * f64::EPSILON);
    }
}
