//! Numerical Fatou coordinates `φ̂_n = Q_n∘T'∘Fⁿ` with
//! `Q_n(u, w) = (u - n - A log n, λ⁻ⁿw)`, their functional equation
//! `φ̂∘F = χ∘φ̂`, limit-map probes and basin rasters.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugation::{boundary_sample, ConjugationChain, Region, UPoint};
use crate::error::{Error, Result};
use crate::maps::{PlaneMap, Point2};
use crate::numeric::cauchy::{winding_number, Winding};
use crate::numeric::{Precision, C64};
use crate::orbits::{drive, estimate_a, iterate, median, step_coords, AFit, IterateOptions, Ladder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinClass {
    Inside,
    Escaped,
    Undecided,
    Axis,
}

impl BasinClass {
    pub fn pgm_byte(self) -> u8 {
        match self {
            BasinClass::Inside => 255,
            BasinClass::Escaped => 0,
            BasinClass::Undecided => 128,
            BasinClass::Axis => 64,
        }
    }
}

/// `axis` on `z = 0`; `inside` once the orbit is captured by the ladder;
/// `escaped` past the overflow guard; `undecided` otherwise.
pub fn basin_classify(map: &dyn PlaneMap, ladder: &Ladder, p: Point2, n_max: u64) -> BasinClass {
    if p.z == C64::new(0.0, 0.0) {
        return BasinClass::Axis;
    }
    let mut q = p;
    for _ in 0..=n_max {
        if q.escaped {
            return BasinClass::Escaped;
        }
        if ladder.captures(&q) {
            return BasinClass::Inside;
        }
        q = map.apply(q);
    }
    if q.escaped {
        BasinClass::Escaped
    } else {
        BasinClass::Undecided
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FatouOptions {
    /// Bound on the last Cauchy difference for `converged`.
    pub tol: f64,
    pub precision: Precision,
    /// Length of the classification pre-run.
    pub pre_run: u64,
    pub checkpoints: u32,
}

impl Default for FatouOptions {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            precision: Precision::Double,
            pre_run: 10_000,
            checkpoints: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatouEstimate {
    pub point: Point2,
    pub checkpoints: Vec<u64>,
    /// `φ̂_n` at the checkpoints.
    pub values: Vec<(C64, C64)>,
    /// `‖φ̂_{n_{k+1}} - φ̂_{n_k}‖`.
    pub cauchy: Vec<f64>,
    #[serde(rename = "final")]
    pub final_value: (C64, C64),
    pub converged: bool,
}

impl FatouEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    /// `cauchy[k] n_k / log n_k`, which stays bounded when the differences
    /// decay like `log n / n`.
    pub fn rates(&self) -> Vec<f64> {
        self.cauchy
            .iter()
            .zip(&self.checkpoints)
            .map(|(c, &n)| c * n as f64 / (n as f64).ln())
            .collect()
    }
}

/// `⌈n_max / 2^j⌉` for `j < count`, ascending, without duplicates or values below 2.
pub fn dyadic_checkpoints(n_max: u64, count: u32) -> Vec<u64> {
    let mut v: Vec<u64> = (0..count.min(63))
        .map(|j| n_max.div_ceil(1u64 << j))
        .filter(|&n| n >= 2)
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// `Q_n(u, w) = (u - n - A log n, λ⁻ⁿw)`.
pub fn q_n(chain: &ConjugationChain, n: u64, q: UPoint) -> (C64, C64) {
    let nf = n as f64;
    (q.u - nf - chain.a * nf.ln(), chain.rot.lambda_power(-(n as i64)) * q.w)
}

fn dist2(a: (C64, C64), b: (C64, C64)) -> f64 {
    ((a.0 - b.0).norm_sqr() + (a.1 - b.1).norm_sqr()).sqrt()
}

/// `T'(Fⁿ(p))` for each requested `n` (ascending); `None` where `T'` is undefined.
fn chain_coords_at(chain: &ConjugationChain, precision: Precision, p: Point2, ns: &[u64]) -> Result<Vec<Option<UPoint>>> {
    let n_max = *ns.last().expect("at least one index");
    let mut out = Vec::with_capacity(ns.len());
    let mut next = 0;
    let last = drive(chain, precision, p, n_max, |s| {
        while next < ns.len() && ns[next] == s.n {
            out.push(step_coords(chain, s));
            next += 1;
        }
        true
    })?;
    if last.p.escaped {
        return Err(Error::Classification(format!("the orbit escaped at n = {}", last.n)));
    }
    Ok(out)
}

fn require_inside(chain: &ConjugationChain, ladder: &Ladder, p: Point2, pre_run: u64) -> Result<()> {
    match basin_classify(chain.map(), ladder, p, pre_run) {
        BasinClass::Inside => Ok(()),
        other => Err(Error::Classification(format!("{:?} is classified {other:?}", (p.z, p.w)))),
    }
}

/// `φ̂_n(p)` at dyadic checkpoints up to `n_max`.
pub fn fatou_coordinate(chain: &ConjugationChain, ladder: &Ladder, p: Point2, n_max: u64, opts: &FatouOptions) -> Result<FatouEstimate> {
    require_inside(chain, ladder, p, opts.pre_run)?;
    let ns = dyadic_checkpoints(n_max, opts.checkpoints);
    if ns.is_empty() {
        return Err(Error::Domain("n_max must be at least 2".into()));
    }
    let coords = chain_coords_at(chain, opts.precision, p, &ns)?;
    let mut checkpoints = Vec::new();
    let mut values = Vec::new();
    for (&n, c) in ns.iter().zip(&coords) {
        if let Some(q) = c {
            checkpoints.push(n);
            values.push(q_n(chain, n, *q));
        }
    }
    if checkpoints.last() != Some(&n_max) {
        return Err(Error::Classification("T' is undefined at n_max".into()));
    }
    let cauchy: Vec<f64> = values.windows(2).map(|v| dist2(v[0], v[1])).collect();
    let mut est = FatouEstimate {
        point: p,
        checkpoints,
        values: values.clone(),
        cauchy,
        final_value: *values.last().unwrap(),
        converged: false,
    };
    est.converged = converged(&est, opts.tol);
    Ok(est)
}

/// Last Cauchy difference within `tol`, and the rate `cauchy·n/ln n` no
/// longer growing: its median over the last third of the checkpoints is at
/// most 1.1 times the median over the middle third.
fn converged(est: &FatouEstimate, tol: f64) -> bool {
    let Some(&last) = est.cauchy.last() else { return false };
    let rates = est.rates();
    if rates.len() < 3 {
        return last <= tol;
    }
    let k = rates.len() / 3;
    let tail = &rates[rates.len() - k..];
    let middle = &rates[rates.len() - 2 * k..rates.len() - k];
    last <= tol && median(tail) <= 1.1 * median(middle)
}

/// Fits `A` on the orbit of `p` over `[n_max/10, n_max]` and compares it with
/// the chain's `A`. A gap above `tol` is a calibration error.
pub fn cross_check_a(chain: &ConjugationChain, ladder: &Ladder, p: Point2, n_max: u64, precision: Precision, tol: f64) -> Result<AFit> {
    if n_max < 100 {
        return Err(Error::Insufficient(format!("n_max = {n_max} is too short to fit A")));
    }
    let opts = IterateOptions {
        precision,
        ..IterateOptions::default()
    };
    let rec = iterate(chain, ladder, p, n_max, &opts)?;
    let fit = estimate_a(&rec, n_max / 10, n_max)?;
    let gap = (fit.a - chain.a).norm();
    if !(gap <= tol) {
        return Err(Error::Calibration(format!("orbit A = {} differs from chain A = {} by {gap:e}", fit.a, chain.a)));
    }
    Ok(fit)
}

/// `‖φ̂(F^k p) - χ^k(φ̂(p))‖` with the same `n_max` on both sides, where
/// `χ(u, w) = (u + 1, λw)`.
pub fn functional_equation_residual_k(chain: &ConjugationChain, ladder: &Ladder, p: Point2, n_max: u64, k: u64, opts: &FatouOptions) -> Result<f64> {
    require_inside(chain, ladder, p, opts.pre_run)?;
    let pk = chain.map().iterate_n(p, k);
    require_inside(chain, ladder, pk, opts.pre_run)?;
    let coords = chain_coords_at(chain, opts.precision, p, &[n_max, n_max + k])?;
    let (Some(a), Some(b)) = (coords[0], coords[1]) else {
        return Err(Error::Classification("T' is undefined at n_max".into()));
    };
    let phi_p = q_n(chain, n_max, a);
    let phi_pk = q_n(chain, n_max, b);
    let chi = (phi_p.0 + k as f64, chain.rot.lambda_power(k as i64) * phi_p.1);
    Ok(dist2(phi_pk, chi))
}

pub fn functional_equation_residual(chain: &ConjugationChain, ladder: &Ladder, p: Point2, n_max: u64, opts: &FatouOptions) -> Result<f64> {
    functional_equation_residual_k(chain, ladder, p, n_max, 1, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub u_ray: Vec<f64>,
    /// `|first(φ̂) - (u - A log u)|`.
    pub first_dev: Vec<f64>,
    /// `|second(φ̂) - w|`.
    pub second_dev: Vec<f64>,
    pub abs_tol: f64,
    pub pass: bool,
}

/// Seeds `T'⁻¹(u, w)` along a real ray and compares `φ̂` with
/// `(u - A log u, w)`. Passes when both deviations are non-increasing along
/// the ray and the last first-coordinate deviation is within `abs_tol`.
pub fn asymptotic_form_check(chain: &ConjugationChain, w: C64, u_ray: &[f64], n_max: u64, abs_tol: f64, precision: Precision) -> Result<AsymptoticReport> {
    if u_ray.len() < 4 || u_ray.windows(2).any(|p| p[1] <= p[0]) || u_ray[0] <= 0.0 {
        return Err(Error::Domain("the ray needs at least 4 increasing positive entries".into()));
    }
    let devs: Vec<(f64, f64)> = u_ray
        .par_iter()
        .map(|&u| {
            let p = chain.from_chain(UPoint::real(u, w))?;
            let q = chain_coords_at(chain, precision, p, &[n_max])?[0]
                .ok_or_else(|| Error::Classification("T' is undefined at n_max".into()))?;
            let phi = q_n(chain, n_max, q);
            let uc = C64::new(u, 0.0);
            Ok(((phi.0 - (uc - chain.a * uc.ln())).norm(), (phi.1 - w).norm()))
        })
        .collect::<Result<_>>()?;
    let first_dev: Vec<f64> = devs.iter().map(|d| d.0).collect();
    let second_dev: Vec<f64> = devs.iter().map(|d| d.1).collect();
    let monotone = |v: &[f64]| v.windows(2).all(|p| p[1] <= p[0]);
    let pass = monotone(&first_dev) && monotone(&second_dev) && *first_dev.last().unwrap() <= abs_tol;
    Ok(AsymptoticReport {
        u_ray: u_ray.to_vec(),
        first_dev,
        second_dev,
        abs_tol,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitProbeReport {
    pub n: u64,
    pub samples: usize,
    /// `sup |π₁Fⁿ|` over the sample of `V_{R,δ/4}`.
    pub sup_pi1: f64,
    /// `sup |π₂Fⁿ(z, w) - λⁿw|`.
    pub sup_w_dev: f64,
    pub eta: f64,
    pub targets: Vec<C64>,
    pub windings: Vec<Winding>,
    pub inconclusive: bool,
    pub pass: bool,
}

/// Winding number of `w ↦ λ⁻ⁿπ₂Fⁿ(z0, w) - target` around `|w - target| = radius`.
pub fn limit_winding(chain: &ConjugationChain, z0: C64, n: u64, target: C64, radius: f64, m: usize) -> Winding {
    let back = chain.rot.lambda_power(-(n as i64));
    let f = |w: C64| {
        let q = chain.map().iterate_n(Point2::new(z0, w), n);
        if q.escaped {
            C64::new(f64::NAN, f64::NAN)
        } else {
            back * q.w
        }
    };
    winding_number(f, target, radius, m, target, 1e-6 * radius)
}

/// Checks on `V_{R,δ/4}` after `n` steps: `sup |π₁Fⁿ| ≤ η`,
/// `|π₂Fⁿ - λⁿw| ≤ δ/10`, and winding number 1 for 8 targets on `|w₀| = δ/16`.
pub fn limit_map_probe(chain: &ConjugationChain, region: &Region, n: u64, m: usize, eta: f64) -> Result<LimitProbeReport> {
    if m < 64 || n < 1 {
        return Err(Error::Domain("the probe needs m ≥ 64 and n ≥ 1".into()));
    }
    let delta = region.delta;
    let inner = region.with_delta(delta / 4.0);
    let us = boundary_sample(&inner, m.div_ceil(8).max(2));
    let mut pts = Vec::new();
    for &u in &us {
        for k in 0..8 {
            let w = C64::from_polar(0.99 * delta / 4.0, TAU * (k as f64 + 0.5) / 8.0);
            pts.push(UPoint::new(u, w));
        }
    }
    let lam_n = chain.rot.lambda_power(n as i64);
    let sups: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|q| {
            let p = q.to_plane()?;
            let r = chain.map().iterate_n(p, n);
            Ok(if r.escaped {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (r.z.norm(), (r.w - lam_n * q.w).norm())
            })
        })
        .collect::<Result<_>>()?;
    let sup_pi1 = sups.iter().map(|s| s.0).fold(0.0, f64::max);
    let sup_w_dev = sups.iter().map(|s| s.1).fold(0.0, f64::max);
    let z0 = C64::new(-1.0 / (2.0 * region.r), 0.0);
    let targets: Vec<C64> = (0..8).map(|k| C64::from_polar(delta / 16.0, TAU * k as f64 / 8.0)).collect();
    let windings: Vec<Winding> = targets
        .par_iter()
        .map(|&t| limit_winding(chain, z0, n, t, delta / 8.0, m))
        .collect();
    let inconclusive = windings.contains(&Winding::Inconclusive);
    let pass = sup_pi1 <= eta && sup_w_dev <= delta / 10.0 && windings.iter().all(|w| *w == Winding::Count(1));
    Ok(LimitProbeReport {
        n,
        samples: pts.len(),
        sup_pi1,
        sup_w_dev,
        eta,
        targets,
        windings,
        inconclusive,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlicePlane {
    /// `z` varies over the window, `w` is fixed.
    Z,
    /// `w` varies over the window, `z` is fixed.
    W,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanWindow {
    pub plane: SlicePlane,
    pub fixed: C64,
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl Default for ScanWindow {
    fn default() -> Self {
        Self {
            plane: SlicePlane::Z,
            fixed: C64::new(0.0, 0.0),
            re: [-0.2, 0.05],
            im: [-0.125, 0.125],
            nx: 200,
            ny: 200,
        }
    }
}

impl ScanWindow {
    /// Center of pixel `(i, j)`; row 0 is the top (largest imaginary part).
    pub fn pixel(&self, i: usize, j: usize) -> C64 {
        let x = self.re[0] + (i as f64 + 0.5) * (self.re[1] - self.re[0]) / self.nx as f64;
        let y = self.im[1] - (j as f64 + 0.5) * (self.im[1] - self.im[0]) / self.ny as f64;
        C64::new(x, y)
    }

    pub fn point(&self, i: usize, j: usize) -> Point2 {
        let v = self.pixel(i, j);
        match self.plane {
            SlicePlane::Z => Point2::new(v, self.fixed),
            SlicePlane::W => Point2::new(self.fixed, v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinRaster {
    pub window: ScanWindow,
    pub n_max: u64,
    /// Row-major, `ny` rows of `nx` pixels.
    pub classes: Vec<BasinClass>,
}

pub const MAX_RESOLUTION: usize = 4096;

pub fn basin_scan(map: &dyn PlaneMap, ladder: &Ladder, window: &ScanWindow, n_max: u64) -> Result<BasinRaster> {
    if window.nx == 0 || window.ny == 0 || window.nx > MAX_RESOLUTION || window.ny > MAX_RESOLUTION {
        return Err(Error::Domain(format!("resolution {}x{} is out of range", window.nx, window.ny)));
    }
    let classes = (0..window.nx * window.ny)
        .into_par_iter()
        .map(|k| basin_classify(map, ladder, window.point(k % window.nx, k / window.nx), n_max))
        .collect();
    Ok(BasinRaster {
        window: window.clone(),
        n_max,
        classes,
    })
}

impl BasinRaster {
    pub fn get(&self, i: usize, j: usize) -> BasinClass {
        self.classes[j * self.window.nx + i]
    }

    pub fn count(&self, class: BasinClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn fraction(&self, class: BasinClass) -> f64 {
        self.count(class) as f64 / self.classes.len() as f64
    }

    /// Binary PGM (P5), one byte per pixel.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.window.nx, self.window.ny).into_bytes();
        out.extend(self.classes.iter().map(|c| c.pgm_byte()));
        out
    }

    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.to_pgm())?;
        Ok(())
    }

    /// Labels of the 4-connected components of inside pixels (0 elsewhere)
    /// and the number of components.
    pub fn inside_components(&self) -> (Vec<usize>, usize) {
        let (nx, ny) = (self.window.nx, self.window.ny);
        let mut label = vec![0usize; nx * ny];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..nx * ny {
            if self.classes[start] != BasinClass::Inside || label[start] != 0 {
                continue;
            }
            count += 1;
            label[start] = count;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (i, j) = (k % nx, k / nx);
                let mut visit = |ii: usize, jj: usize| {
                    let kk = jj * nx + ii;
                    if self.classes[kk] == BasinClass::Inside && label[kk] == 0 {
                        label[kk] = count;
                        stack.push(kk);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < nx {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < ny {
                    visit(i, j + 1);
                }
            }
        }
        (label, count)
    }

    /// Size of the inside component containing the pixel just left of
    /// `z = 0` on the row nearest the real axis, if that pixel is inside.
    pub fn component_left_of_origin(&self) -> Option<usize> {
        let w = &self.window;
        let dx = (w.re[1] - w.re[0]) / w.nx as f64;
        let dy = (w.im[1] - w.im[0]) / w.ny as f64;
        let i = ((-w.re[0]) / dx - 0.5).floor();
        let j = (w.im[1] / dy - 0.5).round();
        if i < 0.0 || i >= w.nx as f64 || j < 0.0 || j >= w.ny as f64 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if w.pixel(i, j).re >= 0.0 || self.get(i, j) != BasinClass::Inside {
            return None;
        }
        let (labels, _) = self.inside_components();
        let l = labels[j * w.nx + i];
        Some(labels.iter().filter(|&&x| x == l).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{calibration, chain, ladder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pt(z: C64, w: C64) -> Point2 {
        Point2::new(z, w)
    }

    #[test]
    fn checkpoints_are_dyadic() {
        let v = dyadic_checkpoints(10_000, 32);
        assert_eq!(*v.last().unwrap(), 10_000);
        assert_eq!(v[v.len() - 2], 5000);
        assert!(v.windows(2).all(|p| p[0] < p[1]) && v[0] >= 2);
        assert_eq!(dyadic_checkpoints(1, 32), Vec::<u64>::new());
    }

    #[test]
    fn fatou_coordinate_on_real_seed() {
        let ch = chain();
        let p = pt(c(-0.05, 0.0), c(0.0, 0.0));
        let opts = FatouOptions::default();
        let est = fatou_coordinate(ch, &ladder(), p, 10_000, &opts).unwrap();
        assert!(est.converged);
        assert_eq!(est.values.len(), est.checkpoints.len());
        assert_eq!(est.cauchy.len() + 1, est.values.len());
        // The orbit of w = 0 leaves w = 0 at order z², so the limit is small but not 0.
        assert!(est.final_value.1.norm() < 1e-2);
        let twice = fatou_coordinate(ch, &ladder(), p, 20_000, &opts).unwrap();
        assert!(dist2(twice.final_value, est.final_value) <= *est.cauchy.last().unwrap());
        let rates = est.rates();
        assert!(rates.iter().all(|r| *r < 2.0), "{rates:?}");
        let back: FatouEstimate = serde_json::from_str(&est.to_json()).unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn functional_equation_holds() {
        let ch = chain();
        let p = pt(c(-0.05, 0.0), c(0.0, 0.0));
        let opts = FatouOptions::default();
        let r1 = functional_equation_residual(ch, &ladder(), p, 10_000, &opts).unwrap();
        assert!(r1 <= 1e-3, "{r1}");
        let r5 = functional_equation_residual_k(ch, &ladder(), p, 10_000, 5, &opts).unwrap();
        assert!(r5 <= 5e-3, "{r5}");
        let coarse = functional_equation_residual(ch, &ladder(), p, 1000, &opts).unwrap();
        assert!(r1 < coarse);
    }

    #[test]
    fn a_cross_check() {
        let ch = chain();
        let p = pt(c(-0.05, 0.0), c(0.0, 0.0));
        let fit = cross_check_a(ch, &ladder(), p, 10_000, Precision::Double, 0.1).unwrap();
        assert!((fit.a - ch.a).norm() < 1e-2);
        let shifted = ch.with_a_shift(c(0.2, 0.0));
        assert!(matches!(cross_check_a(&shifted, &ladder(), p, 10_000, Precision::Double, 0.1), Err(Error::Calibration(_))));
        assert!(matches!(cross_check_a(ch, &ladder(), p, 10, Precision::Double, 0.1), Err(Error::Insufficient(_))));
    }

    #[test]
    fn excluded_points_are_classification_errors() {
        let ch = chain();
        let opts = FatouOptions::default();
        for p in [pt(c(0.0, 0.0), c(0.5, 0.0)), pt(c(3.0, 0.0), c(3.0, 0.0))] {
            assert!(matches!(fatou_coordinate(ch, &ladder(), p, 1000, &opts), Err(Error::Classification(_))));
            assert!(matches!(functional_equation_residual(ch, &ladder(), p, 1000, &opts), Err(Error::Classification(_))));
        }
    }

    #[test]
    fn asymptotic_form_and_injected_defect() {
        let ch = chain();
        let ray = [100.0, 200.0, 400.0, 800.0];
        let rep = asymptotic_form_check(ch, c(0.0, 0.0), &ray, 1_000_000, 0.05, Precision::Double).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.first_dev[3] <= rep.first_dev[0]);
        assert!(rep.second_dev[3] < 1e-5);
        let bad = asymptotic_form_check(&ch.with_a_shift(c(0.1, 0.0)), c(0.0, 0.0), &ray, 1_000_000, 0.05, Precision::Double).unwrap();
        assert!(!bad.pass);
        assert!(asymptotic_form_check(ch, c(0.0, 0.0), &[100.0, 200.0, 400.0], 1000, 0.05, Precision::Double).is_err());
    }

    #[test]
    fn limit_map_probe_passes() {
        let ch = chain();
        let cal = calibration();
        let region = cal.region(cal.rung_for(1.0).unwrap());
        let rep = limit_map_probe(ch, &region, 1000, 64, 0.01).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(!rep.inconclusive);
        let z0 = c(-1.0 / (2.0 * region.r), 0.0);
        assert_eq!(limit_winding(ch, z0, 1000, c(0.0, 0.0), region.delta / 8.0, 64), Winding::Count(1));
    }

    #[test]
    fn classify_examples() {
        let ch = chain();
        let l = ladder();
        assert_eq!(basin_classify(ch.map(), &l, pt(c(0.0, 0.0), c(5.0, 0.0)), 10), BasinClass::Axis);
        assert_eq!(basin_classify(ch.map(), &l, pt(c(-0.05, 0.0), c(0.1, 0.0)), 10_000), BasinClass::Inside);
        let far = basin_classify(ch.map(), &l, pt(c(1.0, 0.0), c(0.0, 0.0)), 10_000);
        assert!(matches!(far, BasinClass::Escaped | BasinClass::Undecided));
        assert_eq!(far, basin_classify(ch.map(), &l, pt(c(1.0, 0.0), c(0.0, 0.0)), 10_000));
    }

    fn window(re: [f64; 2], im: [f64; 2], n: usize, fixed: C64) -> ScanWindow {
        ScanWindow {
            plane: SlicePlane::Z,
            fixed,
            re,
            im,
            nx: n,
            ny: n,
        }
    }

    #[test]
    fn scan_examples() {
        let ch = chain();
        let l = ladder();
        let one = basin_scan(ch.map(), &l, &window([-0.05, -0.05], [0.0, 0.0], 1, c(0.0, 0.0)), 10_000).unwrap();
        assert_eq!(one.classes, vec![BasinClass::Inside]);
        let mut row = window([3.0, 30.0], [0.0, 0.0], 1, c(3.0, 0.0));
        row.nx = 256;
        let far = basin_scan(ch.map(), &l, &row, 10_000).unwrap();
        assert_eq!(far.count(BasinClass::Escaped), 256);
        // Off the real axis a few seeds fall back near the axis instead of escaping.
        let box_ = basin_scan(ch.map(), &l, &window([3.0, 6.0], [-1.5, 1.5], 32, c(3.0, 0.0)), 10_000).unwrap();
        assert!(box_.fraction(BasinClass::Escaped) > 0.9);
        let mut axis = window([-1.0, 1.0], [-1.0, 1.0], 8, c(0.0, 0.0));
        axis.plane = SlicePlane::W;
        let ax = basin_scan(ch.map(), &l, &axis, 100).unwrap();
        assert_eq!(ax.count(BasinClass::Axis), 64);
        assert!(basin_scan(ch.map(), &l, &window([0.0, 1.0], [0.0, 1.0], 5000, c(0.0, 0.0)), 1).is_err());
    }

    #[test]
    fn default_window_has_connected_inside_region() {
        let ch = chain();
        let w = ScanWindow::default();
        let r = basin_scan(ch.map(), &ladder(), &w, 10_000).unwrap();
        assert_eq!(r.classes.len(), w.nx * w.ny);
        let size = r.component_left_of_origin().expect("inside pixel left of the origin");
        assert!(size as f64 >= 0.01 * r.classes.len() as f64);
        let again = basin_scan(ch.map(), &ladder(), &w, 10_000).unwrap();
        assert_eq!(again.to_pgm(), r.to_pgm());
        assert!(r.to_pgm().starts_with(b"P5\n200 200\n255\n"));
    }

    #[test]
    fn raising_n_max_never_loses_inside_pixels() {
        let ch = chain();
        let w = window([-0.3, 0.3], [-0.3, 0.3], 40, c(0.2, 0.0));
        let a = basin_scan(ch.map(), &ladder(), &w, 200).unwrap();
        let b = basin_scan(ch.map(), &ladder(), &w, 400).unwrap();
        for (x, y) in a.classes.iter().zip(&b.classes) {
            if *x != BasinClass::Undecided {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn fatou_coordinate_separates_seeds() {
        let ch = chain();
        let l = ladder();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = FatouOptions {
            pre_run: 2000,
            ..FatouOptions::default()
        };
        let seeds: Vec<Point2> = (0..1000)
            .map(|_| pt(c(rng.gen_range(-0.08..-0.03), rng.gen_range(-0.02..0.02)), c(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))))
            .collect();
        let vals: Vec<(C64, C64)> = seeds
            .par_iter()
            .map(|&p| fatou_coordinate(ch, &l, p, 2000, &opts).unwrap().final_value)
            .collect();
        for i in 0..vals.len() {
            for j in 0..i {
                assert!(dist2(vals[i], vals[j]) >= 1e-6);
            }
        }
    }
}
