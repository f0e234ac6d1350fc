//! The coordinate changes `Θ, Φ, Ψ, τ` that bring `F` near its invariant
//! axis to the normal form `H(u, w) = (u + 1 + A/u, λw) + O(1/u²)`.

mod calibrate;
mod chain;

pub use calibrate::{
    boundary_sample, calibrate, rung_checks, Calibration, CalibrationOptions, ChainManifest, Rung, RungChecks,
};

pub use chain::{geometric_samples, ChainOptions, ConjugationChain};

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{AutomorphismSpec, Point2};
use crate::numeric::C64;

/// A point in the `(u, w)` coordinates near `u = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UPoint {
    pub u: C64,
    pub w: C64,
}

impl UPoint {
    pub fn new(u: C64, w: C64) -> Self {
        Self { u, w }
    }

    pub fn real(u: f64, w: C64) -> Self {
        Self::new(C64::new(u, 0.0), w)
    }

    pub fn dist(&self, o: &Self) -> f64 {
        ((self.u - o.u).norm_sqr() + (self.w - o.w).norm_sqr()).sqrt()
    }

    /// `Θ(u, w) = (-1/u, w)` as a point of the original coordinates.
    pub fn to_plane(self) -> Result<Point2> {
        if self.u == C64::new(0.0, 0.0) {
            return Err(Error::Domain("Θ is undefined at u = 0".into()));
        }
        Ok(Point2::new(-self.u.inv(), self.w))
    }

    /// `Θ⁻¹ = Θ` from the original coordinates.
    pub fn from_plane(p: Point2) -> Result<Self> {
        if p.z == C64::new(0.0, 0.0) {
            return Err(Error::Domain("Θ is undefined on the axis z = 0".into()));
        }
        Ok(Self::new(-p.z.inv(), p.w))
    }
}

/// `Θ(z, w) = (-1/z, w)`.
pub fn theta(p: Point2) -> Result<Point2> {
    let q = UPoint::from_plane(p)?;
    Ok(Point2::new(q.u, q.w))
}

/// `γ(δ) = C Σ |d_ℓ| ℓ^r δ^ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFn {
    pub c: f64,
    pub r: f64,
    /// `|d_ℓ|` for `ℓ = 0, 1, ...`; the constant term is ignored.
    pub abs_coeffs: Vec<f64>,
}

impl GammaFn {
    pub fn new(c: f64, r: f64, abs_coeffs: Vec<f64>) -> Self {
        assert!(c > 0.0 && r > 0.0);
        Self { c, r, abs_coeffs }
    }

    /// `C = max(2/c_dio, 1.01)` with the coefficients of `f`.
    pub fn for_spec(spec: &AutomorphismSpec) -> Self {
        let c = (2.0 / spec.rot.dio_c).max(1.01);
        let abs = spec.f_series.coeffs.iter().map(|d| d.norm()).collect();
        Self::new(c, spec.rot.dio_r, abs)
    }

    pub fn eval(&self, delta: f64) -> f64 {
        let mut acc = 0.0;
        let mut p = delta;
        for (l, d) in self.abs_coeffs.iter().enumerate().skip(1) {
            acc += d * (l as f64).powf(self.r) * p;
            p *= delta;
        }
        self.c * acc
    }
}

/// `K_{R,δ} = closure{Re u > -γ(δ)} ∩ {|arg(u - R)| ≤ 3π/4}`, and
/// `U_{R,δ} = K_{R,δ} × {|w| < δ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub r: f64,
    pub delta: f64,
    pub gamma: GammaFn,
}

impl Region {
    pub fn new(r: f64, delta: f64, gamma: GammaFn) -> Self {
        assert!(r > 0.0 && delta > 0.0);
        Self { r, delta, gamma }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self::new(self.r, delta, self.gamma.clone())
    }

    pub fn in_k(&self, u: C64) -> bool {
        in_k(self, u)
    }

    pub fn in_u(&self, q: UPoint) -> bool {
        self.in_k(q.u) && q.w.norm() < self.delta
    }

    /// `V_{R,δ} = Θ(U_{R,δ})`.
    pub fn in_v(&self, p: Point2) -> bool {
        UPoint::from_plane(p).is_ok_and(|q| self.in_u(q))
    }
}

pub fn in_k(region: &Region, u: C64) -> bool {
    if !(u.re.is_finite() && u.im.is_finite()) {
        return false;
    }
    let d = u - region.r;
    u.re >= -region.gamma.eval(region.delta) && (d.norm() == 0.0 || d.arg().abs() <= 3.0 * FRAC_PI_4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::section5_map;
    use crate::rotation::golden_rotation;
    use proptest::prelude::*;

    fn gamma() -> GammaFn {
        GammaFn::for_spec(&section5_map(&golden_rotation()).1)
    }

    #[test]
    fn gamma_vanishes_at_zero_and_exceeds_one_coefficient() {
        let g = gamma();
        assert_eq!(g.eval(0.0), 0.0);
        assert!(g.c > 1.0);
        assert!(g.eval(0.5) > 0.5);
    }

    #[test]
    fn region_examples() {
        let reg = Region::new(40.0, 0.5, gamma());
        let gam = reg.gamma.eval(0.5);
        assert!(reg.in_k(C64::new(41.0, 0.0)));
        assert!(!reg.in_k(C64::new(-2.0 * gam, 0.0)));
        assert!(reg.in_k(C64::new(40.0, 7.0)));
        assert!(reg.in_k(C64::new(40.0, 0.0)));
        assert!(!reg.in_k(C64::new(30.0, 0.0)));
        assert!(reg.in_k(C64::new(30.0, 10.0)));
    }

    #[test]
    fn theta_examples() {
        let p = Point2::new(C64::new(1.0, 0.0), C64::new(0.3, 0.1));
        assert_eq!(theta(p).unwrap().z, C64::new(-1.0, 0.0));
        assert!(theta(Point2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))).is_err());
        let reg = Region::new(40.0, 0.5, gamma());
        let q = UPoint::new(C64::new(60.0, 5.0), C64::new(0.1, 0.0));
        assert!(reg.in_u(q));
        assert!(reg.in_v(q.to_plane().unwrap()));
    }

    proptest! {
        #[test]
        fn theta_is_an_involution(re in -5.0..5.0f64, im in -5.0..5.0f64, w in -1.0..1.0f64) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let p = Point2::new(C64::new(re, im), C64::new(w, 0.0));
            let back = theta(theta(p).unwrap()).unwrap();
            prop_assert!((back.z - p.z).norm() <= 1e-14 * p.z.norm().max(1.0));
            prop_assert_eq!(back.w, p.w);
        }

        #[test]
        fn gamma_doubles(delta in 1e-3..1.0f64) {
            let g = gamma();
            prop_assert!(g.eval(2.0 * delta) >= 2.0 * g.eval(delta));
            prop_assert!(g.eval(delta * 1.01) > g.eval(delta));
        }

        #[test]
        fn k_is_forward_invariant(re in -3.0..200.0f64, im in -200.0..200.0f64, t in 0.0..500.0f64) {
            let reg = Region::new(40.0, 0.5, gamma());
            let u = C64::new(re, im);
            if reg.in_k(u) {
                prop_assert!(reg.in_k(u + t));
            }
        }
    }
}
