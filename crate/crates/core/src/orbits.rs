//! Forward orbits of `F`, their `u`-coordinates, and the asymptotics
//! `Re u_n > T + n/2`, `|w_n - λⁿw_0| < ε` and `|1/u_n - 1/n| ≤ C log n/n²`.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugation::{Calibration, ConjugationChain, UPoint};
use crate::error::{Error, Result};
use crate::maps::{PlaneMap, Point2, ResolvedWord};
use crate::numeric::{ComplexDD, ComplexScalar, DoubleDouble, Precision, C64};
use crate::rotation::lambda_power_of;

/// One calibrated `V_{R,δ}` used to decide that an orbit has been captured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub r: f64,
    pub delta: f64,
    /// `γ(δ)`, cached.
    pub gamma: f64,
}

/// The rungs `V_{R_m, δ_m/4}` of a calibration together with the
/// threshold `|z| < z_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub rungs: Vec<LadderRung>,
    pub z_in: f64,
}

pub const DEFAULT_Z_IN: f64 = 0.05;

impl Ladder {
    pub fn from_calibration(cal: &Calibration, z_in: f64) -> Self {
        let rungs = cal
            .rungs
            .iter()
            .map(|r| {
                let delta = r.delta / 4.0;
                LadderRung {
                    r: r.r,
                    delta,
                    gamma: cal.gamma.eval(delta),
                }
            })
            .collect();
        Self { rungs, z_in }
    }

    pub fn captures(&self, p: &Point2) -> bool {
        if p.escaped || p.z == C64::new(0.0, 0.0) || !(p.z.norm() < self.z_in) {
            return false;
        }
        let u = -p.z.inv();
        let wn = p.w.norm();
        self.rungs.iter().any(|r| {
            let d = u - r.r;
            wn < r.delta && u.re >= -r.gamma && (d.norm() == 0.0 || d.arg().abs() <= 3.0 * FRAC_PI_4)
        })
    }
}

/// A step of an orbit: the point rounded to `f64` and `Θ`'s `u = -1/z`
/// computed at the working precision.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub n: u64,
    pub p: Point2,
    pub u_theta: Option<C64>,
}

fn theta_u<S: ComplexScalar>(z: S) -> Option<C64> {
    if z.is_zero() {
        None
    } else {
        Some(z.neg_recip_c64())
    }
}

/// Runs `F` at the requested precision, calling `visit` on every point
/// (including `n = 0`) until it returns `false`, the orbit escapes, or
/// `n_max` is reached. Returns the last step.
pub fn drive(chain: &ConjugationChain, precision: Precision, p0: Point2, n_max: u64, mut visit: impl FnMut(&Step) -> bool) -> Result<Step> {
    fn run<S: ComplexScalar, M: PlaneMap<S> + ?Sized>(map: &M, p0: Point2, n_max: u64, visit: &mut dyn FnMut(&Step) -> bool) -> Step {
        let mut p = Point2::<S>::from_c64(p0);
        let mut n = 0;
        loop {
            let step = Step {
                n,
                p: p.to_c64(),
                u_theta: theta_u(p.z),
            };
            if !visit(&step) || p.escaped || n >= n_max {
                return step;
            }
            p = map.apply(p);
            n += 1;
        }
    }
    match precision {
        Precision::Double => Ok(run::<C64, _>(chain.map(), p0, n_max, &mut visit)),
        Precision::DoubleDouble => {
            let word = chain
                .word
                .as_ref()
                .ok_or_else(|| Error::Domain("double-double iteration needs a shear word".into()))?;
            let map: ResolvedWord<ComplexDD> = word.resolve(&chain.rot);
            Ok(run::<ComplexDD, _>(&map, p0, n_max, &mut visit))
        }
    }
}

/// `T'` at a step.
pub fn step_coords(chain: &ConjugationChain, step: &Step) -> Option<UPoint> {
    let u = step.u_theta?;
    chain.to_chain_from_theta(UPoint::new(u, step.p.w)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Converging,
    Escaped,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterateOptions {
    pub precision: Precision,
    /// Every point up to this index is stored.
    pub decimate_above: u64,
    /// Beyond `decimate_above`, every `stride`-th point is stored.
    pub stride: u64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            precision: Precision::Double,
            decimate_above: 10_000,
            stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub initial: Point2,
    pub indices: Vec<u64>,
    pub points: Vec<Point2>,
    /// `T'(z_n, w_n)` where it is defined.
    pub coords: Vec<Option<UPoint>>,
    pub status: OrbitStatus,
    pub n_done: u64,
    pub theta: DoubleDouble,
}

impl OrbitRecord {
    /// `u_n` aligned with `points`.
    pub fn u_seq(&self) -> Vec<Option<C64>> {
        self.coords.iter().map(|c| c.map(|q| q.u)).collect()
    }

    /// `(n, u_n, w_n)` for the stored steps where `T'` is defined.
    pub fn defined(&self) -> impl Iterator<Item = (u64, UPoint)> + '_ {
        self.indices
            .iter()
            .zip(&self.coords)
            .filter_map(|(&n, c)| c.map(|q| (n, q)))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "re_z", "im_z", "re_w", "im_w", "re_u", "im_u", "w_dev"])
            .map_err(csv_err)?;
        let w0 = self.initial.w;
        for ((&n, p), c) in self.indices.iter().zip(&self.points).zip(&self.coords) {
            let dev = (p.w - lambda_pow(self.theta, n) * w0).norm();
            let (ur, ui) = match c {
                Some(q) => (q.u.re.to_string(), q.u.im.to_string()),
                None => (String::new(), String::new()),
            };
            wtr.write_record([
                n.to_string(),
                p.z.re.to_string(),
                p.z.im.to_string(),
                p.w.re.to_string(),
                p.w.im.to_string(),
                ur,
                ui,
                dev.to_string(),
            ])
            .map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

fn lambda_pow(theta: DoubleDouble, n: u64) -> C64 {
    lambda_power_of(theta, n as i64)
}

/// Iterates `F` from `p0`, storing the orbit (decimated beyond
/// `decimate_above`) and its `T'` coordinates. The orbit is converging once
/// it is captured by `ladder`.
pub fn iterate(chain: &ConjugationChain, ladder: &Ladder, p0: Point2, n_max: u64, opts: &IterateOptions) -> Result<OrbitRecord> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let stride = opts.stride.max(1);
    let mut rec = OrbitRecord {
        initial: p0,
        indices: Vec::new(),
        points: Vec::new(),
        coords: Vec::new(),
        status: OrbitStatus::Undecided,
        n_done: 0,
        theta: chain.rot.theta,
    };
    let mut captured = false;
    let last = drive(chain, opts.precision, p0, n_max, |s| {
        captured |= ladder.captures(&s.p);
        let keep = s.n <= opts.decimate_above || s.n % stride == 0 || s.p.escaped || s.n == n_max;
        if keep {
            rec.indices.push(s.n);
            rec.points.push(s.p);
            rec.coords.push(if s.p.escaped { None } else { step_coords(chain, s) });
        }
        true
    })?;
    rec.n_done = last.n;
    rec.status = if last.p.escaped {
        OrbitStatus::Escaped
    } else if captured {
        OrbitStatus::Converging
    } else {
        OrbitStatus::Undecided
    };
    Ok(rec)
}

/// Independent seeds in parallel.
pub fn iterate_many(chain: &ConjugationChain, ladder: &Ladder, seeds: &[Point2], n_max: u64, opts: &IterateOptions) -> Result<Vec<OrbitRecord>> {
    seeds
        .par_iter()
        .map(|&p| iterate(chain, ladder, p, n_max, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma34Report {
    pub pass: bool,
    pub checked: usize,
    /// `min_n (Re u_n - T - n/2)`.
    pub min_margin: f64,
    pub max_w_dev: f64,
    pub first_violation: Option<(u64, String)>,
}

/// `Re(u_n) > T + n/2` and `|w_n - λⁿw_0| < ε` on every stored step.
pub fn check_lemma34(rec: &OrbitRecord, t: f64, eps: f64) -> Lemma34Report {
    let mut rep = Lemma34Report {
        pass: true,
        checked: 0,
        min_margin: f64::INFINITY,
        max_w_dev: 0.0,
        first_violation: None,
    };
    let fail = |rep: &mut Lemma34Report, n: u64, why: String| {
        if rep.first_violation.is_none() {
            rep.first_violation = Some((n, why));
        }
        rep.pass = false;
    };
    let Some(Some(q0)) = rec.coords.first() else {
        fail(&mut rep, 0, "the seed is outside the domain of T'".into());
        return rep;
    };
    for (&n, c) in rec.indices.iter().zip(&rec.coords) {
        let Some(q) = c else {
            fail(&mut rep, n, "the orbit left the domain of T'".into());
            continue;
        };
        rep.checked += 1;
        let margin = q.u.re - t - n as f64 / 2.0;
        let dev = (q.w - lambda_pow(rec.theta, n) * q0.w).norm();
        rep.min_margin = rep.min_margin.min(margin);
        rep.max_w_dev = rep.max_w_dev.max(dev);
        if !(margin > 0.0) {
            fail(&mut rep, n, format!("Re u_n = {} ≤ T + n/2", q.u.re));
        }
        if !(dev < eps) {
            fail(&mut rep, n, format!("|w_n - λⁿw_0| = {dev}"));
        }
    }
    if rec.status == OrbitStatus::Escaped {
        fail(&mut rep, rec.n_done, "the orbit escaped".into());
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AFit {
    pub a: C64,
    pub b: C64,
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `u_n = n + A log n + B` over `n ∈ [n_min, n_max]`.
pub fn estimate_a(rec: &OrbitRecord, n_min: u64, n_max: u64) -> Result<AFit> {
    if n_min < 10 || n_max > rec.n_done || n_max <= n_min {
        return Err(Error::Domain(format!("bad fit window [{n_min}, {n_max}] for n_done = {}", rec.n_done)));
    }
    let pts: Vec<(f64, C64)> = rec
        .defined()
        .filter(|&(n, _)| n >= n_min && n <= n_max)
        .map(|(n, q)| (n as f64, q.u))
        .collect();
    fit_log_model(&pts)
}

/// Fit of `u = n + A log n + B` to `(n, u)` pairs.
pub fn fit_log_model(pts: &[(f64, C64)]) -> Result<AFit> {
    if pts.len() < 3 {
        return Err(Error::Insufficient(format!("{} converging samples", pts.len())));
    }
    let m = pts.len();
    let x = DMatrix::from_fn(m, 2, |i, j| if j == 0 { pts[i].0.ln() } else { 1.0 });
    let yr = DVector::from_fn(m, |i, _| pts[i].1.re - pts[i].0);
    let yi = DVector::from_fn(m, |i, _| pts[i].1.im);
    let svd = x.clone().svd(true, true);
    let cr = svd.solve(&yr, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let ci = svd.solve(&yi, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let rr = &x * &cr - yr;
    let ri = &x * &ci - yi;
    Ok(AFit {
        a: C64::new(cr[0], ci[0]),
        b: C64::new(cr[1], ci[1]),
        residual: ((rr.norm_squared() + ri.norm_squared()) / m as f64).sqrt(),
        samples: m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma35Report {
    pub pass: bool,
    /// Smallest `C` with `|1/u_n - 1/n| ≤ C log n/n²` on the window.
    pub c: f64,
    pub first_decile_median: f64,
    pub last_decile_median: f64,
    pub samples: usize,
}

pub fn check_lemma35(rec: &OrbitRecord) -> Lemma35Report {
    check_lemma35_range(rec, 10, rec.n_done)
}

/// Envelope fit on `n ∈ [n_lo, n_hi]`; passes when `C` is finite and the
/// ratio `|1/u_n - 1/n| n²/log n` shows no upward trend (median of the last
/// decile at most that of the first).
pub fn check_lemma35_range(rec: &OrbitRecord, n_lo: u64, n_hi: u64) -> Lemma35Report {
    let pts: Vec<(f64, C64)> = rec
        .defined()
        .filter(|&(n, _)| n >= n_lo.max(2) && n <= n_hi)
        .map(|(n, q)| (n as f64, q.u))
        .collect();
    lemma35_from_pairs(&pts)
}

pub fn lemma35_from_pairs(pts: &[(f64, C64)]) -> Lemma35Report {
    let ratios: Vec<f64> = pts
        .iter()
        .map(|&(n, u)| (u.inv() - 1.0 / n).norm() * n * n / n.ln())
        .collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    let k = (ratios.len() / 10).max(1);
    let (first, last) = if ratios.len() >= 2 {
        (median(&ratios[..k]), median(&ratios[ratios.len() - k..]))
    } else {
        (f64::NAN, f64::NAN)
    };
    Lemma35Report {
        pass: ratios.len() >= 10 && c.is_finite() && last <= first,
        c,
        first_decile_median: first,
        last_decile_median: last,
        samples: ratios.len(),
    }
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{calibration, chain, ladder};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn synthetic(u: impl Fn(f64) -> C64, n_max: u64) -> OrbitRecord {
        let indices: Vec<u64> = (0..=n_max).collect();
        OrbitRecord {
            initial: Point2::new(c(-1.0, 0.0), c(0.0, 0.0)),
            points: indices.iter().map(|_| Point2::new(c(0.0, 0.0), c(0.0, 0.0))).collect(),
            coords: indices
                .iter()
                .map(|&n| if n == 0 { None } else { Some(UPoint::new(u(n as f64), c(0.0, 0.0))) })
                .collect(),
            indices,
            status: OrbitStatus::Converging,
            n_done: n_max,
            theta: chain().rot.theta,
        }
    }

    fn calibrated_seed(w0: C64) -> (Point2, f64) {
        let cal = calibration();
        let t = cal.rungs[cal.rung_for(0.5).unwrap()].r;
        (chain().from_chain(UPoint::real(2.0 * t, w0)).unwrap(), t)
    }

    #[test]
    fn axis_orbit_rotates() {
        let ch = chain();
        let w = c(0.7, -1.1);
        let rec = iterate(ch, &ladder(), Point2::new(c(0.0, 0.0), w), 2000, &IterateOptions::default()).unwrap();
        assert_eq!(rec.status, OrbitStatus::Undecided);
        for (&n, p) in rec.indices.iter().zip(&rec.points) {
            assert_eq!(p.z, c(0.0, 0.0));
            assert!((p.w - ch.rot.lambda_power(n as i64) * w).norm() < 1e-11);
        }
        assert!(rec.coords.iter().all(|q| q.is_none()));
    }

    #[test]
    fn real_basin_seed_converges() {
        let rec = iterate(chain(), &ladder(), Point2::new(c(-0.05, 0.0), c(0.0, 0.0)), 2000, &IterateOptions::default()).unwrap();
        assert_eq!(rec.status, OrbitStatus::Converging);
        for pair in rec.points[100..].windows(2) {
            assert!(pair[1].z.norm() < pair[0].z.norm());
        }
    }

    #[test]
    fn far_seed_escapes() {
        let rec = iterate(chain(), &ladder(), Point2::new(c(3.0, 0.0), c(3.0, 0.0)), 100, &IterateOptions::default()).unwrap();
        assert_eq!(rec.status, OrbitStatus::Escaped);
        assert!(rec.n_done <= 100);
        assert!(rec.points.last().unwrap().escaped);
        assert!(!rec.points[..rec.points.len() - 1].iter().any(|p| p.escaped));
    }

    #[test]
    fn lemma34_on_calibrated_seeds() {
        let (p0, t) = calibrated_seed(c(0.0, 0.0));
        let rec = iterate(chain(), &ladder(), p0, 2000, &IterateOptions::default()).unwrap();
        let rep = check_lemma34(&rec, t, 0.1);
        assert!(rep.pass, "{rep:?}");
        // w = 0 is not invariant, so w_n is small rather than identically 0.
        assert!(rep.max_w_dev < 1e-2);

        let (p0, t) = calibrated_seed(C64::from_polar(0.125, 0.4));
        let rec = iterate(chain(), &ladder(), p0, 3000, &IterateOptions::default()).unwrap();
        assert!(check_lemma34(&rec, t, 0.1).pass);
    }

    #[test]
    fn lemma34_reports_sector_violation() {
        let ch = chain();
        let cal = calibration();
        let i = cal.rung_for(0.5).unwrap();
        let gam = cal.rungs[i].gamma;
        let p0 = ch.from_chain(UPoint::real(-2.0 * gam, c(0.1, 0.0))).unwrap();
        let rec = iterate(ch, &ladder(), p0, 200, &IterateOptions::default()).unwrap();
        let rep = check_lemma34(&rec, cal.rungs[i].r, 0.1);
        assert!(!rep.pass);
        assert_eq!(rep.first_violation.unwrap().0, 0);
    }

    #[test]
    fn synthetic_fits() {
        let rec = synthetic(|n| c(n + 3.0 * n.ln() + 2.0, 0.0), 500);
        let fit = estimate_a(&rec, 10, 500).unwrap();
        assert!((fit.a - c(3.0, 0.0)).norm() < 1e-9 && (fit.b - c(2.0, 0.0)).norm() < 1e-9);
        assert!(fit.residual <= 1e-10);
        let rec = synthetic(|n| c(n + 2.0, 0.0), 500);
        assert!(estimate_a(&rec, 10, 500).unwrap().a.norm() < 1e-6);
        assert!(matches!(estimate_a(&rec, 5, 500), Err(Error::Domain(_))));
        assert!(matches!(estimate_a(&rec, 10, 600), Err(Error::Domain(_))));
        let mut sparse = synthetic(|n| c(n, 0.0), 50);
        sparse.coords.iter_mut().skip(12).for_each(|q| *q = None);
        assert!(matches!(estimate_a(&sparse, 10, 50), Err(Error::Insufficient(_))));
    }

    #[test]
    fn synthetic_lemma35() {
        let rep = check_lemma35(&synthetic(|n| c(n, 0.0), 1000));
        assert!(rep.pass && rep.c == 0.0);
        let rep = check_lemma35(&synthetic(|n| c(n + n.sqrt(), 0.0), 1000));
        assert!(!rep.pass);
    }

    #[test]
    fn section5_orbit_asymptotics() {
        let ch = chain();
        let (p0, _) = calibrated_seed(C64::from_polar(0.125, 1.0));
        let rec = iterate(ch, &ladder(), p0, 10_000, &IterateOptions::default()).unwrap();
        let fit = estimate_a(&rec, 1000, 10_000).unwrap();
        let refit = estimate_a(&rec, 2000, 10_000).unwrap();
        assert!((fit.a - ch.a).norm() < 1e-2, "{} vs {}", fit.a, ch.a);
        assert!((fit.a - refit.a).norm() < 1e-2);
        let rep = check_lemma35_range(&rec, 100, 10_000);
        assert!(rep.pass, "{rep:?}");

        let pts: Vec<(u64, UPoint)> = rec.defined().collect();
        for pair in pts.windows(2) {
            let step = pair[1].1.u.re - pair[0].1.u.re;
            assert!((0.5..=1.5).contains(&step), "{step} at {}", pair[0].0);
        }
        // λ^{-n} w_n is Cauchy with tails of order 1/n.
        let scaled: Vec<C64> = pts
            .iter()
            .map(|&(n, q)| ch.rot.lambda_power(-(n as i64)) * q.w)
            .collect();
        let diffs: Vec<f64> = scaled.windows(2).map(|p| (p[1] - p[0]).norm()).collect();
        let mut tail = 0.0;
        let mut worst: f64 = 0.0;
        for (k, d) in diffs.iter().enumerate().rev() {
            tail += d;
            let n = pts[k].0 as f64;
            if n >= 100.0 {
                worst = worst.max(tail * n);
            }
        }
        assert!(worst < 1.0, "{worst}");
    }

    #[test]
    fn decimation_and_csv() {
        let opts = IterateOptions {
            decimate_above: 1000,
            stride: 50,
            ..IterateOptions::default()
        };
        let rec = iterate(chain(), &ladder(), Point2::new(c(-0.05, 0.0), c(0.0, 0.0)), 3000, &opts).unwrap();
        assert_eq!(rec.indices.len(), 1001 + 40);
        assert_eq!(rec.points[0], rec.initial);
        assert_eq!(rec.u_seq().len(), rec.points.len());
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,re_z,im_z,re_w,im_w,re_u,im_u,w_dev");
        assert_eq!(lines.count(), rec.points.len());
    }

    #[test]
    fn double_double_agrees_with_double() {
        let p0 = Point2::new(c(-0.05, 0.01), c(0.1, 0.0));
        let d = iterate(chain(), &ladder(), p0, 500, &IterateOptions::default()).unwrap();
        let dd_opts = IterateOptions {
            precision: Precision::DoubleDouble,
            ..IterateOptions::default()
        };
        let dd = iterate(chain(), &ladder(), p0, 500, &dd_opts).unwrap();
        assert_eq!(d.status, dd.status);
        for (a, b) in d.points.iter().zip(&dd.points) {
            assert!(a.dist(b) < 1e-12);
        }
    }
}
