//! Double-double real arithmetic (~106 bits of mantissa).
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`. The
//! error-free transforms follow Dekker/Knuth; multiplication relies on a
//! fused multiply-add for the exact product error.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const PI: Self = Self {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const TAU: Self = Self {
        hi: std::f64::consts::TAU,
        lo: 2.449_293_598_294_706_4e-16,
    };
    pub const FRAC_PI_2: Self = Self {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123_233_995_736_766e-17,
    };
    pub const LN_2: Self = Self {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn mul_f64_f64(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Multiplication by an exact power of two.
    #[inline]
    pub fn ldexp(self, e: i32) -> Self {
        let s = 2f64.powi(e);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            let (hi, lo) = quick_two_sum(hi, self.lo.floor());
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    pub fn round(self) -> Self {
        (self + Self::from_f64(0.5)).floor()
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> Self {
        let f = self - self.floor();
        if f.hi >= 1.0 {
            f - Self::ONE
        } else {
            f
        }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        // One Newton step on top of the double estimate doubles the precision.
        let x = self.hi.sqrt();
        let residual = self - Self::mul_f64_f64(x, x);
        let (hi, lo) = quick_two_sum(x, residual.hi / (2.0 * x));
        Self { hi, lo }
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.78 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::ONE;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Self::LN_2 * Self::from_f64(k);
        // |r| <= ln2/2; scale down so the Taylor series converges in a few terms.
        let r = r.ldexp(-10);
        // e^r - 1, kept as the small quantity to avoid cancellation on squaring.
        let mut term = r;
        let mut s = r;
        for n in 2..=12 {
            term = term * r / Self::from_f64(n as f64);
            s += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            // (1+s)^2 - 1 = 2s + s^2
            s = s.ldexp(1) + s.sqr();
        }
        (s + Self::ONE).ldexp(k as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(f64::NAN);
        }
        // Newton on exp: x <- x + a e^{-x} - 1.
        let mut x = Self::from_f64(self.hi.ln());
        for _ in 0..2 {
            x = x + self * (-x).exp() - Self::ONE;
        }
        x
    }

    /// Simultaneous sine and cosine.
    pub fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 && self.lo == 0.0 {
            return (Self::ZERO, Self::ONE);
        }
        let k = (self / Self::FRAC_PI_2).round();
        let r = self - Self::FRAC_PI_2 * k;
        let (s, c) = sin_cos_taylor(r);
        let quadrant = (k.hi as i64 + k.lo as i64).rem_euclid(4);
        match quadrant {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

/// Taylor series for `|r| <= pi/4`, evaluated on `r/8` and lifted by three
/// double-angle steps.
fn sin_cos_taylor(r: DoubleDouble) -> (DoubleDouble, DoubleDouble) {
    let x = r.ldexp(-3);
    let x2 = x.sqr();
    let mut term = x;
    let mut s = x;
    let mut n = 1.0;
    loop {
        term = -(term * x2) / DoubleDouble::from_f64((n + 1.0) * (n + 2.0));
        s += term;
        n += 2.0;
        if term.hi.abs() < 1e-40 || n > 40.0 {
            break;
        }
    }
    let mut term = DoubleDouble::ONE;
    let mut c = DoubleDouble::ONE;
    let mut n = 0.0;
    loop {
        term = -(term * x2) / DoubleDouble::from_f64((n + 1.0) * (n + 2.0));
        c += term;
        n += 2.0;
        if term.hi.abs() < 1e-40 || n > 40.0 {
            break;
        }
    }
    for _ in 0..3 {
        let s2 = (s * c).ldexp(1);
        let c2 = c.sqr() - s.sqr();
        s = s2;
        c = c2;
    }
    (s, c)
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl From<i64> for DoubleDouble {
    fn from(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Self::new(hi, lo)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}

impl AddAssign for DoubleDouble {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for DoubleDouble {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for DoubleDouble {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi, self.lo)
    }
}
