use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GammaFn, UPoint};
use crate::error::{Error, Result};
use crate::maps::{AutomorphismSpec, PlaneMap, Point2, ShearWord};
use crate::numeric::cauchy::coefficients_from_samples;
use crate::numeric::newton::{damped_newton, NewtonOptions};
use crate::numeric::summation::{abel_tail, AbelOrder, SMALL_DIVISOR_CUTOFF};
use crate::numeric::{TruncatedSeries, C64};
use crate::rotation::RotationNumber;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainOptions {
    /// Direct terms of every kernel sum `Σ_k λ^{mk}/(u+k)` before the Abel tail.
    pub k_sum: usize,
    pub abel_order: u32,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Radius of the ring on which `h` is sampled.
    pub h_radius: f64,
    pub h_ring: usize,
    pub h_degree: usize,
    /// Real `u` at which `G̃` is sampled to extract `h(w)`.
    pub u_samples: Vec<f64>,
    /// Number of inverse powers `1/u, ..., 1/u^P` in the fit.
    pub fit_terms: usize,
    pub fit_tol: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            k_sum: 256,
            abel_order: 64,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            h_radius: 1.0,
            h_ring: 32,
            h_degree: 16,
            u_samples: geometric_samples(100.0, 3200.0, 8),
            fit_terms: 4,
            fit_tol: 1e-7,
        }
    }
}

impl ChainOptions {
    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
        }
    }
}

/// `count` geometrically spaced values from `lo` to `hi`.
pub fn geometric_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let q = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| lo * q.powi(i as i32)).collect()
}

/// `F`, its normal-form data, and the maps
/// `Φ(u,w) = (u, w + λ⁻¹ Σ b_ℓ w^ℓ Σ_k λ^{(ℓ-1)k}/(u+k))`,
/// `Ψ(u,w) = (u + Σ d_ℓ/(λ^ℓ-1) w^ℓ, w)` and
/// `τ(u,w) = (u - Σ_k (h(λ^k w) - A)/(u+k), w)`.
///
/// `G̃ = Ψ⁻¹Φ⁻¹ΘFΘΦΨ` and `H = τ⁻¹G̃τ`.
#[derive(Clone)]
pub struct ConjugationChain {
    pub rot: RotationNumber,
    pub spec: AutomorphismSpec,
    pub word: Option<ShearWord>,
    pub h_series: TruncatedSeries,
    pub a: C64,
    /// Constant term of the ring transform of `h`, kept as a diagnostic
    /// (`a` itself comes from the fit at `w = 0`).
    pub a_ring_mean: C64,
    pub gamma: GammaFn,
    pub opts: ChainOptions,
    map: Arc<dyn PlaneMap>,
    lam: Vec<C64>,
    mus: Vec<C64>,
    tail_start: Vec<C64>,
    beta: Vec<C64>,
    psi: TruncatedSeries,
}

impl fmt::Debug for ConjugationChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugationChain")
            .field("lambda", &self.rot.lambda)
            .field("a", &self.a)
            .field("h_series", &self.h_series)
            .field("opts", &self.opts)
            .finish()
    }
}

impl ConjugationChain {
    /// Chain for the map realized by `spec.realization`.
    pub fn from_spec(spec: AutomorphismSpec, opts: ChainOptions) -> Result<Self> {
        let word = spec
            .realization
            .clone()
            .ok_or_else(|| Error::Domain("the spec carries no shear word".into()))?;
        let map = Arc::new(word.resolve::<C64>(&spec.rot));
        Self::new(spec, map, Some(word), opts)
    }

    /// Chain for an arbitrary realization of `spec`; fits `h` and `A`.
    pub fn new(spec: AutomorphismSpec, map: Arc<dyn PlaneMap>, word: Option<ShearWord>, opts: ChainOptions) -> Result<Self> {
        let mut chain = Self::unfitted(spec, map, word, opts)?;
        chain.fit_h()?;
        Ok(chain)
    }

    fn unfitted(spec: AutomorphismSpec, map: Arc<dyn PlaneMap>, word: Option<ShearWord>, opts: ChainOptions) -> Result<Self> {
        if opts.k_sum < 8 || opts.h_ring < 2 * opts.h_degree || opts.h_radius <= 0.0 {
            return Err(Error::Domain("inconsistent chain options".into()));
        }
        let rot = spec.rot.clone();
        let f = &spec.f_series;
        let g = &spec.g_series;
        let m_max = g.degree().saturating_sub(1).max(opts.h_degree).max(1);
        let mut mus = vec![C64::new(1.0, 0.0)];
        for m in 1..=m_max.max(f.degree()) {
            let mu = rot.lambda_power(m as i64);
            let modulus = (mu - 1.0).norm();
            if modulus < SMALL_DIVISOR_CUTOFF {
                return Err(Error::SmallDivisor { n: m as i64, modulus });
            }
            mus.push(mu);
        }
        let lam = (0..=opts.k_sum).map(|k| rot.lambda_power(k as i64)).collect();
        let tail_start = (0..=m_max)
            .map(|m| rot.lambda_power((m * (opts.k_sum + 1)) as i64))
            .collect();
        let lam_inv = rot.lambda_power(-1);
        let beta = g.coeffs.iter().map(|b| b * lam_inv).collect();
        let mut q = vec![C64::new(0.0, 0.0); f.degree() + 1];
        for l in 1..=f.degree() {
            q[l] = f.coeff(l) / (mus[l] - 1.0);
        }
        let tail_factor = ((f.degree() + 1) as f64).powf(rot.dio_r) / rot.dio_c;
        let psi = TruncatedSeries::new(q, f.validity_radius, f.tail_bound * tail_factor);
        let gamma = GammaFn::for_spec(&spec);
        Ok(Self {
            rot,
            h_series: TruncatedSeries::zero(opts.h_degree, opts.h_radius),
            a: C64::new(0.0, 0.0),
            a_ring_mean: C64::new(0.0, 0.0),
            gamma,
            spec,
            word,
            opts,
            map,
            lam,
            mus,
            tail_start,
            beta,
            psi,
        })
    }

    fn fit_h(&mut self) -> Result<()> {
        let samples = self.opts.u_samples.clone();
        let a = self.estimate_h(C64::new(0.0, 0.0), &samples)?;
        let m = self.opts.h_ring;
        let r = self.opts.h_radius;
        let mut ring = Vec::with_capacity(m);
        for j in 0..m {
            let e = C64::from_polar(1.0, TAU * j as f64 / m as f64);
            ring.push((e, self.estimate_h(e * r, &samples)?));
        }
        let mut coeffs = coefficients_from_samples(&ring, r, self.opts.h_degree + 1);
        self.a_ring_mean = coeffs[0];
        coeffs[0] = a;
        self.h_series = TruncatedSeries::with_extrapolated_tail(coeffs, r);
        self.a = a;
        Ok(())
    }

    /// The same chain with `A` (and the constant term of `h`) shifted by `da`.
    pub fn with_a_shift(&self, da: C64) -> Self {
        let mut c = self.clone();
        c.a += da;
        c.h_series.coeffs[0] += da;
        c
    }

    pub fn map(&self) -> &dyn PlaneMap {
        self.map.as_ref()
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        self.map.apply(p)
    }

    /// `S_m(u) = Σ_{k≥0} λ^{mk}/(u+k)` for `m = 1..=m_max` (index 0 unused),
    /// with the direct part of `S_m'(u)` when `deriv` is set.
    fn kernel_sums(&self, u: C64, m_max: usize, deriv: bool) -> Result<(Vec<C64>, Vec<C64>)> {
        let k = self.opts.k_sum;
        if !(u.re > -(k as f64) / 2.0) || !u.im.is_finite() {
            return Err(Error::Domain(format!("u = {u} is outside the summation guard")));
        }
        let zero = C64::new(0.0, 0.0);
        let mut s = vec![zero; m_max + 1];
        let mut ds = vec![zero; if deriv { m_max + 1 } else { 0 }];
        for j in 0..=k {
            let d = u + j as f64;
            if d.norm() < 1e-12 {
                return Err(Error::Domain(format!("pole of the kernel at u = {u}")));
            }
            let inv = d.inv();
            let base = self.lam[j];
            let mut p = base;
            if deriv {
                let inv2 = inv * inv;
                for m in 1..=m_max {
                    s[m] += p * inv;
                    ds[m] -= p * inv2;
                    p *= base;
                }
            } else {
                for sm in s.iter_mut().take(m_max + 1).skip(1) {
                    *sm += p * inv;
                    p *= base;
                }
            }
        }
        let v = u + (k + 1) as f64;
        for m in 1..=m_max {
            let mu = self.mus[m];
            let (t, _) = abel_tail(mu, 1.0 - mu, v, self.tail_start[m], AbelOrder::Adaptive(self.opts.abel_order));
            s[m] += t;
        }
        Ok((s, ds))
    }

    fn g_is_zero(&self) -> bool {
        self.beta.iter().all(|b| b.norm() == 0.0)
    }

    /// Coefficients `κ_ℓ(u) = λ⁻¹ b_ℓ S_{ℓ-1}(u)` of `Φ`'s shift as a polynomial in `w`.
    fn phi_kernel(&self, u: C64) -> Result<Vec<C64>> {
        let deg = self.beta.len() - 1;
        let (s, _) = self.kernel_sums(u, deg.saturating_sub(1).max(1), false)?;
        let mut kappa = vec![C64::new(0.0, 0.0); deg + 1];
        for l in 2..=deg {
            kappa[l] = self.beta[l] * s[l - 1];
        }
        Ok(kappa)
    }

    fn check_w(&self, w: C64, radius: f64) -> Result<()> {
        if w.norm() > radius * (1.0 + 1e-12) || !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::Domain(format!("|w| = {} exceeds validity radius {radius}", w.norm())));
        }
        Ok(())
    }

    pub fn phi_map(&self, q: UPoint) -> Result<UPoint> {
        self.check_w(q.w, self.spec.g_series.validity_radius)?;
        if self.g_is_zero() || q.w == C64::new(0.0, 0.0) {
            return Ok(q);
        }
        let kappa = self.phi_kernel(q.u)?;
        Ok(UPoint::new(q.u, q.w + horner(&kappa, q.w)))
    }

    /// Solves `w + κ(u, w) = w_target` by damped Newton from `w_target`.
    /// The root must be certified unique near the target by Rouché's
    /// theorem inside the validity disc.
    pub fn phi_inv(&self, q: UPoint) -> Result<UPoint> {
        if self.g_is_zero() || q.w == C64::new(0.0, 0.0) {
            self.check_w(q.w, self.spec.g_series.validity_radius)?;
            return Ok(q);
        }
        let kappa = self.phi_kernel(q.u)?;
        let w = damped_newton(
            |w| {
                let (p, dp) = horner_d(&kappa, w);
                Ok((w + p - q.w, 1.0 + dp))
            },
            q.w,
            q.w.norm(),
            self.opts.newton(),
        )?;
        // Rouché on |w - w_target| = s: the root found is the only one there.
        let s = (4.0 * (w - q.w).norm()).max(1e-12 * q.w.norm().max(1.0));
        let on_circle = (0..16)
            .map(|j| horner(&kappa, q.w + C64::from_polar(s, TAU * j as f64 / 16.0)).norm())
            .fold(0.0, f64::max);
        if q.w.norm() + s > self.spec.g_series.validity_radius || !(on_circle < s) {
            return Err(Error::NoConvergence {
                iterations: self.opts.newton_max_iter,
                residual: (w - q.w).norm(),
            });
        }
        Ok(UPoint::new(q.u, w))
    }

    pub fn psi_map(&self, q: UPoint) -> Result<UPoint> {
        self.check_w(q.w, self.psi.validity_radius)?;
        Ok(UPoint::new(q.u + self.psi.eval_unchecked(q.w), q.w))
    }

    pub fn psi_inv(&self, q: UPoint) -> Result<UPoint> {
        self.check_w(q.w, self.psi.validity_radius)?;
        Ok(UPoint::new(q.u - self.psi.eval_unchecked(q.w), q.w))
    }

    /// `G̃ = Ψ⁻¹∘Φ⁻¹∘Θ∘F∘Θ∘Φ∘Ψ`.
    pub fn g_tilde(&self, q: UPoint) -> Result<UPoint> {
        let p = self.from_chain(q)?;
        let p1 = self.map.apply(p);
        if p1.escaped {
            return Err(Error::Domain("F escaped while evaluating G̃".into()));
        }
        self.to_chain(p1)
    }

    /// Coefficients `a_1..a_P` of `first(G̃(u, w)) - u - 1 ≈ Σ a_p u^{-p}` from a
    /// least-squares fit over `u_samples`.
    pub fn fit_inverse_powers(&self, w: C64, u_samples: &[f64]) -> Result<Vec<C64>> {
        let p = self.opts.fit_terms.max(1);
        if u_samples.len() < 4 || u_samples.len() <= p {
            return Err(Error::Domain("too few u samples for the fit".into()));
        }
        if u_samples.iter().any(|&u| u < 50.0) || u_samples.windows(2).any(|s| s[1] <= s[0]) {
            return Err(Error::Domain("u samples must be increasing and at least 50".into()));
        }
        let u0 = u_samples[0];
        let n = u_samples.len();
        let mut x = DMatrix::<f64>::zeros(n, p);
        let mut y_re = DVector::<f64>::zeros(n);
        let mut y_im = DVector::<f64>::zeros(n);
        for (i, &u) in u_samples.iter().enumerate() {
            let q1 = self.g_tilde(UPoint::real(u, w))?;
            let y = q1.u - u - 1.0;
            y_re[i] = y.re;
            y_im[i] = y.im;
            for k in 0..p {
                x[(i, k)] = (u0 / u).powi(k as i32 + 1);
            }
        }
        let svd = x.clone().svd(true, true);
        let c_re = svd.solve(&y_re, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
        let c_im = svd.solve(&y_im, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
        let r_re = &x * &c_re - &y_re;
        let r_im = &x * &c_im - &y_im;
        let rms = ((r_re.norm_squared() + r_im.norm_squared()) / n as f64).sqrt();
        if !(rms <= self.opts.fit_tol) {
            return Err(Error::IllConditioned(format!("h fit residual {rms:e} at w = {w}")));
        }
        Ok((0..p)
            .map(|k| C64::new(c_re[k], c_im[k]) * u0.powi(k as i32 + 1))
            .collect())
    }

    /// `h(w)`, the `1/u` coefficient of `first(G̃(u, w)) - u - 1`.
    pub fn estimate_h(&self, w: C64, u_samples: &[f64]) -> Result<C64> {
        Ok(self.fit_inverse_powers(w, u_samples)?[0])
    }

    pub fn h(&self, w: C64) -> Result<C64> {
        self.h_series.eval(w)
    }

    /// `Σ_{j≥1} h_j w^j S_j(u)` and (with `deriv`) an approximation of its
    /// `u`-derivative.
    fn tau_shift(&self, u: C64, w: C64, deriv: bool) -> Result<(C64, C64)> {
        let zero = C64::new(0.0, 0.0);
        let jmax = self.h_series.degree();
        if w == zero || jmax == 0 || self.h_series.coeffs[1..].iter().all(|c| c.norm() == 0.0) {
            return Ok((zero, zero));
        }
        let (s, ds) = self.kernel_sums(u, jmax, deriv)?;
        let mut shift = zero;
        let mut dshift = zero;
        let mut wp = w;
        for j in 1..=jmax {
            let c = self.h_series.coeffs[j] * wp;
            shift += c * s[j];
            if deriv {
                dshift += c * ds[j];
            }
            wp *= w;
        }
        Ok((shift, dshift))
    }

    pub fn tau_map(&self, q: UPoint) -> Result<UPoint> {
        self.check_w(q.w, self.h_series.validity_radius)?;
        let (shift, _) = self.tau_shift(q.u, q.w, false)?;
        Ok(UPoint::new(q.u - shift, q.w))
    }

    /// Solves `u - shift(u, w) = u_target` by damped Newton from `u_target`.
    pub fn tau_inv(&self, q: UPoint) -> Result<UPoint> {
        self.check_w(q.w, self.h_series.validity_radius)?;
        if q.w == C64::new(0.0, 0.0) {
            return Ok(q);
        }
        let u = damped_newton(
            |u| {
                let (s, ds) = self.tau_shift(u, q.w, true)?;
                Ok((u - s - q.u, 1.0 - ds))
            },
            q.u,
            (1e-2 * q.u.norm()).max(1.0),
            self.opts.newton(),
        )?;
        Ok(UPoint::new(u, q.w))
    }

    /// `H = τ⁻¹∘G̃∘τ`.
    pub fn h_eval(&self, q: UPoint) -> Result<UPoint> {
        self.tau_inv(self.g_tilde(self.tau_map(q)?)?)
    }

    /// `H` evaluated as `T∘F∘T⁻¹` through the original coordinates.
    pub fn h_eval_via_plane(&self, q: UPoint) -> Result<UPoint> {
        let p1 = self.map.apply(self.from_normal(q)?);
        if p1.escaped {
            return Err(Error::Domain("F escaped while evaluating H".into()));
        }
        self.to_normal(p1)
    }

    /// `T' = Ψ⁻¹∘Φ⁻¹∘Θ`, from `(z, w)` to the coordinates of `G̃`.
    pub fn to_chain(&self, p: Point2) -> Result<UPoint> {
        self.to_chain_from_theta(UPoint::from_plane(p)?)
    }

    /// `Ψ⁻¹∘Φ⁻¹`, i.e. `T'` for a point already mapped by `Θ`.
    pub fn to_chain_from_theta(&self, q: UPoint) -> Result<UPoint> {
        self.psi_inv(self.phi_inv(q)?)
    }

    /// `T'⁻¹ = Θ∘Φ∘Ψ`.
    pub fn from_chain(&self, q: UPoint) -> Result<Point2> {
        self.phi_map(self.psi_map(q)?)?.to_plane()
    }

    /// `T = τ⁻¹∘T'`, from `(z, w)` to the coordinates of `H`.
    pub fn to_normal(&self, p: Point2) -> Result<UPoint> {
        self.tau_inv(self.to_chain(p)?)
    }

    pub fn from_normal(&self, q: UPoint) -> Result<Point2> {
        self.from_chain(self.tau_map(q)?)
    }
}

fn horner(c: &[C64], w: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &k| acc * w + k)
}

fn horner_d(c: &[C64], w: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &k in c.iter().rev() {
        dp = dp * w + p;
        p = p * w + k;
    }
    (p, dp)
}
