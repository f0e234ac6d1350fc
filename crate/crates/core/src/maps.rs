//! Shear/overshear words, their exact evaluation and inversion, and
//! numerical extraction of normal-form coefficients.
//!
//! An elementary map changes one coordinate (`target`) using the other
//! (`other`):
//!
//! * shear: `target -> alpha * target + phi(other)`
//! * overshear: `target -> alpha * target * exp(phi(other))`
//!
//! where `phi` is `a s`, `a e^{c s}` or `-a e^{c s}`. Every scalar parameter
//! is a [`Coefficient`] `c * lambda^k`, so words that involve the multiplier
//! can be written down before a rotation number is chosen.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::cauchy::taylor_coefficient;
use crate::numeric::series::{exp_scaled_series, TruncatedSeries};
use crate::numeric::{ComplexDD, ComplexScalar, C64};
use crate::rotation::RotationNumber;

/// Moduli beyond this mark a point as escaped.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e100;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `c * lambda^lambda_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    #[serde(default = "one")]
    pub c: C64,
    #[serde(default)]
    pub lambda_pow: i64,
}

impl Coefficient {
    pub const ONE: Self = Self {
        c: C64::new(1.0, 0.0),
        lambda_pow: 0,
    };

    pub fn constant(c: f64) -> Self {
        Self {
            c: C64::new(c, 0.0),
            lambda_pow: 0,
        }
    }

    pub fn lambda(k: i64) -> Self {
        Self {
            c: one(),
            lambda_pow: k,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        Self {
            c: self.c * o.c,
            lambda_pow: self.lambda_pow + o.lambda_pow,
        }
    }

    pub fn inv(self) -> Self {
        Self {
            c: self.c.inv(),
            lambda_pow: -self.lambda_pow,
        }
    }

    pub fn neg(self) -> Self {
        Self {
            c: -self.c,
            lambda_pow: self.lambda_pow,
        }
    }

    pub fn resolve<S: RotationScalar>(self, rot: &RotationNumber) -> S {
        let c = S::from_c64(self.c);
        if self.lambda_pow == 0 {
            c
        } else {
            c * S::lambda_power(rot, self.lambda_pow)
        }
    }
}

/// Scalars that can be built from powers of a rotation's multiplier.
pub trait RotationScalar: ComplexScalar {
    fn lambda_power(rot: &RotationNumber, n: i64) -> Self;
}

impl RotationScalar for C64 {
    fn lambda_power(rot: &RotationNumber, n: i64) -> Self {
        rot.lambda_power(n)
    }
}

impl RotationScalar for ComplexDD {
    fn lambda_power(rot: &RotationNumber, n: i64) -> Self {
        rot.lambda_power_dd(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Shear,
    Overshear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    /// `a s`
    Linear { a: Coefficient },
    /// `a e^{c s}`
    Exp { a: Coefficient, c: Coefficient },
    /// `-a e^{c s}`
    NegExp { a: Coefficient, c: Coefficient },
}

impl Profile {
    /// `-phi / alpha`
    fn neg_div(self, alpha: Coefficient) -> Self {
        let s = alpha.inv();
        match self {
            Profile::Linear { a } => Profile::Linear { a: a.mul(s).neg() },
            Profile::Exp { a, c } => Profile::NegExp { a: a.mul(s), c },
            Profile::NegExp { a, c } => Profile::Exp { a: a.mul(s), c },
        }
    }

    fn negated(self) -> Self {
        match self {
            Profile::Linear { a } => Profile::Linear { a: a.neg() },
            Profile::Exp { a, c } => Profile::NegExp { a, c },
            Profile::NegExp { a, c } => Profile::Exp { a, c },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryMap {
    pub kind: Kind,
    pub axis: Axis,
    #[serde(default = "coefficient_one")]
    pub multiplier: Coefficient,
    pub profile: Profile,
}

fn coefficient_one() -> Coefficient {
    Coefficient::ONE
}

impl ElementaryMap {
    pub fn shear(axis: Axis, multiplier: Coefficient, profile: Profile) -> Self {
        Self {
            kind: Kind::Shear,
            axis,
            multiplier,
            profile,
        }
    }

    pub fn overshear(axis: Axis, multiplier: Coefficient, profile: Profile) -> Self {
        Self {
            kind: Kind::Overshear,
            axis,
            multiplier,
            profile,
        }
    }

    pub fn inverse(&self) -> Self {
        let alpha = self.multiplier.inv();
        let profile = match self.kind {
            Kind::Shear => self.profile.neg_div(self.multiplier),
            Kind::Overshear => self.profile.negated(),
        };
        Self {
            kind: self.kind,
            axis: self.axis,
            multiplier: alpha,
            profile,
        }
    }
}

/// Factors applied first to last.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShearWord {
    pub factors: Vec<ElementaryMap>,
}

impl ShearWord {
    pub fn new(factors: Vec<ElementaryMap>) -> Self {
        Self { factors }
    }

    /// Reversed list of inverted factors.
    pub fn inverse(&self) -> Self {
        Self {
            factors: self.factors.iter().rev().map(ElementaryMap::inverse).collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("shear words always serialize")
    }

    pub fn resolve<S: RotationScalar>(&self, rot: &RotationNumber) -> ResolvedWord<S> {
        ResolvedWord {
            forward: self.factors.iter().map(|f| ResolvedFactor::new(f, rot)).collect(),
            backward: self.inverse().factors.iter().map(|f| ResolvedFactor::new(f, rot)).collect(),
            guard: DEFAULT_OVERFLOW_GUARD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<S = C64> {
    pub z: S,
    pub w: S,
    #[serde(default)]
    pub escaped: bool,
}

impl<S: ComplexScalar> Point2<S> {
    pub fn new(z: S, w: S) -> Self {
        Self { z, w, escaped: false }
    }

    pub fn to_c64(self) -> Point2<C64> {
        Point2 {
            z: self.z.to_c64(),
            w: self.w.to_c64(),
            escaped: self.escaped,
        }
    }

    pub fn from_c64(p: Point2<C64>) -> Self {
        Self {
            z: S::from_c64(p.z),
            w: S::from_c64(p.w),
            escaped: p.escaped,
        }
    }
}

impl Point2<C64> {
    pub fn dist(&self, o: &Self) -> f64 {
        ((self.z - o.z).norm_sqr() + (self.w - o.w).norm_sqr()).sqrt()
    }
}

/// A holomorphic self-map of (a domain in) C^2.
pub trait PlaneMap<S: ComplexScalar = C64>: Send + Sync {
    fn apply(&self, p: Point2<S>) -> Point2<S>;

    fn iterate_n(&self, mut p: Point2<S>, n: u64) -> Point2<S> {
        for _ in 0..n {
            if p.escaped {
                break;
            }
            p = self.apply(p);
        }
        p
    }
}

#[derive(Debug, Clone, Copy)]
enum ResolvedProfile<S> {
    Linear(S),
    Exp(S, S),
    NegExp(S, S),
}

#[derive(Debug, Clone, Copy)]
struct ResolvedFactor<S> {
    kind: Kind,
    axis: Axis,
    alpha: S,
    profile: ResolvedProfile<S>,
}

impl<S: RotationScalar> ResolvedFactor<S> {
    fn new(f: &ElementaryMap, rot: &RotationNumber) -> Self {
        let profile = match f.profile {
            Profile::Linear { a } => ResolvedProfile::Linear(a.resolve(rot)),
            Profile::Exp { a, c } => ResolvedProfile::Exp(a.resolve(rot), c.resolve(rot)),
            Profile::NegExp { a, c } => ResolvedProfile::NegExp(a.resolve(rot), c.resolve(rot)),
        };
        Self {
            kind: f.kind,
            axis: f.axis,
            alpha: f.multiplier.resolve(rot),
            profile,
        }
    }
}

impl<S: ComplexScalar> ResolvedFactor<S> {
    /// Returns false if an overshear factor underflowed a nonzero
    /// coordinate to zero, which would drop the point onto an axis.
    #[inline]
    fn apply(&self, p: &mut Point2<S>) -> bool {
        let (t, o) = match self.axis {
            Axis::First => (p.z, p.w),
            Axis::Second => (p.w, p.z),
        };
        let phi = match self.profile {
            ResolvedProfile::Linear(a) => a * o,
            ResolvedProfile::Exp(a, c) => a * (c * o).exp(),
            ResolvedProfile::NegExp(a, c) => -(a * (c * o).exp()),
        };
        let (t, ok) = match self.kind {
            Kind::Shear => (self.alpha * t + phi, true),
            // 0 * e^phi is 0 even when e^phi overflows.
            Kind::Overshear if t.is_zero() => (t, true),
            Kind::Overshear => {
                let r = self.alpha * t * phi.exp();
                (r, !r.is_zero())
            }
        };
        match self.axis {
            Axis::First => p.z = t,
            Axis::Second => p.w = t,
        }
        ok
    }
}

/// A shear word with coefficients evaluated for one rotation number.
///
/// A point is flagged escaped once a coordinate exceeds `guard` or becomes
/// non-finite, or when an overshear underflows a nonzero coordinate to zero.
#[derive(Debug, Clone)]
pub struct ResolvedWord<S = C64> {
    forward: Vec<ResolvedFactor<S>>,
    backward: Vec<ResolvedFactor<S>>,
    pub guard: f64,
}

impl<S: ComplexScalar> ResolvedWord<S> {
    fn run(&self, factors: &[ResolvedFactor<S>], mut p: Point2<S>) -> Point2<S> {
        if p.escaped {
            return p;
        }
        for f in factors {
            let ok = f.apply(&mut p);
            let (a, b) = (p.z.modulus(), p.w.modulus());
            if !ok || !(a <= self.guard && b <= self.guard) {
                p.escaped = true;
                return p;
            }
        }
        p
    }

    pub fn apply_inverse(&self, p: Point2<S>) -> Point2<S> {
        self.run(&self.backward, p)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

impl<S: ComplexScalar> PlaneMap<S> for ResolvedWord<S> {
    fn apply(&self, p: Point2<S>) -> Point2<S> {
        self.run(&self.forward, p)
    }
}

/// `apply` as a free function on a resolved word.
pub fn apply<S: ComplexScalar>(word: &ResolvedWord<S>, p: Point2<S>) -> Point2<S> {
    word.apply(p)
}

pub fn apply_inverse<S: ComplexScalar>(word: &ResolvedWord<S>, p: Point2<S>) -> Point2<S> {
    word.apply_inverse(p)
}

/// The normal-form data `(lambda, f, g)` of
/// `F(z, w) = (z + f(w) z^2 + O(z^3), lambda w + z g(w) + O(z^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismSpec {
    pub rot: RotationNumber,
    pub f_series: TruncatedSeries,
    pub g_series: TruncatedSeries,
    pub realization: Option<ShearWord>,
}

impl AutomorphismSpec {
    pub fn new(
        rot: RotationNumber,
        f_series: TruncatedSeries,
        g_series: TruncatedSeries,
        realization: Option<ShearWord>,
    ) -> Result<Self> {
        if (f_series.coeff(0) - 1.0).norm() > 1e-14 {
            return Err(Error::Domain(format!("f(0) = {} must be 1", f_series.coeff(0))));
        }
        if g_series.coeff(0).norm() > 1e-14 || g_series.coeff(1).norm() > 1e-14 {
            return Err(Error::Domain("g must vanish to second order".into()));
        }
        Ok(Self {
            rot,
            f_series,
            g_series,
            realization,
        })
    }
}

/// `F_1, ..., F_5`:
/// `(z, lambda w + z)`, `(z e^w, w)`, `(z, w - z)`, `(z e^{-w}, w)`, `(z, w e^z)`.
pub fn section5_word() -> ShearWord {
    let lin = |a: f64| Profile::Linear {
        a: Coefficient::constant(a),
    };
    ShearWord::new(vec![
        ElementaryMap::shear(Axis::Second, Coefficient::lambda(1), lin(1.0)),
        ElementaryMap::overshear(Axis::First, Coefficient::ONE, lin(1.0)),
        ElementaryMap::shear(Axis::Second, Coefficient::ONE, lin(-1.0)),
        ElementaryMap::overshear(Axis::First, Coefficient::ONE, lin(-1.0)),
        ElementaryMap::overshear(Axis::Second, Coefficient::ONE, lin(1.0)),
    ])
}

pub const DEFAULT_DEGREE: usize = 30;
pub const DEFAULT_SERIES_RADIUS: f64 = 2.0;

/// The word together with `f(w) = e^{lambda w}` and
/// `g(w) = -(e^{lambda w} - 1 - lambda w)`.
pub fn section5_map(rot: &RotationNumber) -> (ShearWord, AutomorphismSpec) {
    section5_map_with(rot, DEFAULT_DEGREE, DEFAULT_SERIES_RADIUS)
}

pub fn section5_map_with(rot: &RotationNumber, degree: usize, rho: f64) -> (ShearWord, AutomorphismSpec) {
    let word = section5_word();
    let f = exp_scaled_series(rot.lambda, degree, rho);
    let mut g_coeffs: Vec<C64> = f.coeffs.iter().map(|c| -c).collect();
    g_coeffs[0] = C64::new(0.0, 0.0);
    if degree >= 1 {
        g_coeffs[1] = C64::new(0.0, 0.0);
    }
    let g = TruncatedSeries::new(g_coeffs, rho, f.tail_bound);
    let spec = AutomorphismSpec::new(rot.clone(), f, g, Some(word.clone()))
        .expect("the exponential normal form is normalized");
    (word, spec)
}

pub const Z2_SAMPLES: usize = 64;
pub const Z2_RADIUS: f64 = 1e-3;

/// Coefficient of `z^2` in `z -> first(map(z, w))`, by a discrete Cauchy
/// integral on `|z| = rho`.
pub fn z2_coefficient_with<F>(first: F, m: usize, rho: f64) -> C64
where
    F: Fn(C64) -> C64,
{
    taylor_coefficient(first, C64::new(0.0, 0.0), rho, m, 2)
}

pub fn extract_z2_coefficient(map: &impl PlaneMap, w: C64) -> C64 {
    z2_coefficient_with(|z| map.apply(Point2::new(z, w)).z, Z2_SAMPLES, Z2_RADIUS)
}

pub fn extract_z2_coefficient_inverse(word: &ResolvedWord, w: C64) -> C64 {
    z2_coefficient_with(|z| word.apply_inverse(Point2::new(z, w)).z, Z2_SAMPLES, Z2_RADIUS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrowth {
    pub closed: C64,
    pub numeric: C64,
}

/// Second `z`-derivative of `first(F^n)` at `(0, w)`: in closed form
/// `2 sum_{k<n} f(lambda^k w)` and numerically from `F^n` itself.
pub fn boundary_growth(spec: &AutomorphismSpec, map: &impl PlaneMap, w: C64, n: u64) -> Result<BoundaryGrowth> {
    assert!(n >= 1);
    let mut closed = C64::new(0.0, 0.0);
    for k in 0..n {
        closed += spec.f_series.eval(spec.rot.lambda_power(k as i64) * w)?;
    }
    closed *= 2.0;
    let rho = Z2_RADIUS.min(0.05 / n as f64);
    let c2 = z2_coefficient_with(|z| map.iterate_n(Point2::new(z, w), n).z, Z2_SAMPLES, rho);
    Ok(BoundaryGrowth {
        closed,
        numeric: 2.0 * c2,
    })
}

/// A-priori bound on `|2 sum_{k<n} f(lambda^k w) - 2n|` uniform in `n`:
/// `4 sum_l |d_l| |w|^l / |lambda^l - 1|`.
pub fn boundary_growth_bound(spec: &AutomorphismSpec, w: C64) -> f64 {
    let r = w.norm();
    (1..=spec.f_series.degree())
        .map(|l| {
            let d = spec.f_series.coeff(l).norm();
            4.0 * d * r.powi(l as i32) / (spec.rot.lambda_power(l as i64) - 1.0).norm()
        })
        .sum()
}

/// Jacobian determinant of `map` at `p`, each partial derivative taken by a
/// Cauchy integral in one variable.
pub fn jacobian_det(map: &impl PlaneMap, p: Point2) -> C64 {
    let (m, r) = (16, 1e-3);
    let dz = |sel: fn(&Point2) -> C64| {
        taylor_coefficient(|t| sel(&map.apply(Point2::new(t, p.w))), p.z, r, m, 1)
    };
    let dw = |sel: fn(&Point2) -> C64| {
        taylor_coefficient(|t| sel(&map.apply(Point2::new(p.z, t))), p.w, r, m, 1)
    };
    let first = |q: &Point2| q.z;
    let second = |q: &Point2| q.w;
    dz(first) * dw(second) - dw(first) * dz(second)
}
