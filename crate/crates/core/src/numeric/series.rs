use serde::{Deserialize, Serialize};

use super::scalar::C64;
use crate::error::{Error, Result};

/// Power series `c_0 + c_1 w + ... + c_L w^L` standing in for an entire
/// function, together with a bound on what the truncation drops on
/// `|w| <= validity_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    pub coeffs: Vec<C64>,
    pub validity_radius: f64,
    pub tail_bound: f64,
}

impl TruncatedSeries {
    /// Series with the given coefficients and an explicitly known tail bound.
    pub fn new(coeffs: Vec<C64>, validity_radius: f64, tail_bound: f64) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least c_0");
        assert!(validity_radius > 0.0 && tail_bound >= 0.0);
        Self {
            coeffs,
            validity_radius,
            tail_bound,
        }
    }

    /// The zero function.
    pub fn zero(degree: usize, validity_radius: f64) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); degree + 1], validity_radius, 0.0)
    }

    /// Series whose tail is estimated from the decay of its last coefficients.
    ///
    /// The ratios `|c_l| rho^l` over the top few degrees are fitted to a
    /// geometric rate `q`; the tail is then bounded by the geometric remainder.
    /// A non-decaying tail yields an infinite bound.
    pub fn with_extrapolated_tail(coeffs: Vec<C64>, validity_radius: f64) -> Self {
        let tail = extrapolated_tail(&coeffs, validity_radius);
        Self::new(coeffs, validity_radius, tail)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, l: usize) -> C64 {
        self.coeffs.get(l).copied().unwrap_or_default()
    }

    /// Horner evaluation, rejecting points outside the validity disc.
    pub fn eval(&self, w: C64) -> Result<C64> {
        if w.norm() > self.validity_radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|w| = {} exceeds series validity radius {}",
                w.norm(),
                self.validity_radius
            )));
        }
        Ok(self.eval_unchecked(w))
    }

    #[inline]
    pub fn eval_unchecked(&self, w: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * w + c)
    }

    /// Value and first derivative at `w`.
    pub fn eval_with_derivative(&self, w: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        (p, dp)
    }

    /// `sum |c_l| r^l`, a majorant of the series on `|w| <= r`.
    pub fn abs_sum(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }
}

/// Tail estimate by geometric extrapolation of the last coefficients.
pub fn extrapolated_tail(coeffs: &[C64], rho: f64) -> f64 {
    let l = coeffs.len() - 1;
    if l < 4 {
        return if coeffs.iter().skip(1).all(|c| c.norm() == 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let mags: Vec<f64> = (0..=l)
        .map(|k| coeffs[k].norm() * rho.powi(k as i32))
        .collect();
    let window = &mags[l.saturating_sub(4)..=l];
    let top = window.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    // Worst ratio over the window, skipping exact zeros (odd/even series).
    let mut q: f64 = 0.0;
    for pair in window.windows(2) {
        if pair[0] > 0.0 && pair[1] > 0.0 {
            q = q.max(pair[1] / pair[0]);
        }
    }
    if q == 0.0 {
        q = 0.5;
    }
    if q >= 1.0 {
        return f64::INFINITY;
    }
    top * q / (1.0 - q)
}

/// Taylor series of `e^{a w}` to degree `L`, valid on `|w| <= rho`.
///
/// The tail bound is `(|a| rho)^{L+1} / (L+1)! * e^{|a| rho}`.
pub fn exp_scaled_series(a: C64, degree: usize, rho: f64) -> TruncatedSeries {
    assert!(rho > 0.0);
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut c = C64::new(1.0, 0.0);
    coeffs.push(c);
    for l in 1..=degree {
        c = c * a / l as f64;
        coeffs.push(c);
    }
    let x = a.norm() * rho;
    // (x^{L+1}/(L+1)!) accumulated multiplicatively to avoid overflow.
    let mut t = 1.0;
    for k in 1..=degree + 1 {
        t *= x / k as f64;
    }
    TruncatedSeries::new(coeffs, rho, t * x.exp())
}
