use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use super::{ChainOptions, ConjugationChain, GammaFn, Region, UPoint};
use crate::error::{Error, Result};
use crate::numeric::{TruncatedSeries, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub deltas: Vec<f64>,
    pub r_start: f64,
    pub r_doublings: u32,
    pub w_angles: usize,
    pub boundary_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            deltas: vec![0.125, 0.25, 0.5, 1.0],
            r_start: 16.0,
            r_doublings: 8,
            w_angles: 8,
            boundary_points: 8,
        }
    }
}

/// Worst values of the residual checks over the sample of `U_{R,δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungChecks {
    /// `max |Φ(q) - q|`, required `< δ/4`.
    pub phi_shift: f64,
    /// `max |∂_w(Φ(q) - q)|`, required `< 1/2`.
    pub phi_derivative: f64,
    /// `max |u_1 - u_0 - 1|` for `(u_1, w_1) = G̃(u_0, w_0)`, required `< 1/2`.
    pub step: f64,
    /// `max |w_1 - λ w_0|`, required `< δ/8`.
    pub w_step: f64,
    /// `max |τ(q) - q|`, required `< 1/4`.
    pub tau_shift: f64,
    /// `max |Ψ(q) - q|`, required `≤ γ(δ)`.
    pub psi_shift: f64,
    /// `max |Φ(q) - q| |u|`.
    pub c_phi: f64,
}

impl RungChecks {
    pub fn pass(&self, delta: f64, gamma: f64) -> bool {
        self.phi_shift < delta / 4.0
            && self.phi_derivative < 0.5
            && self.step < 0.5
            && self.w_step < delta / 8.0
            && self.tau_shift < 0.25
            && self.psi_shift <= gamma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub delta: f64,
    pub r: f64,
    pub gamma: f64,
    pub checks: RungChecks,
}

/// Working values of `R(δ)` for a ladder of `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub rungs: Vec<Rung>,
    pub gamma: GammaFn,
}

impl Calibration {
    pub fn region(&self, i: usize) -> Region {
        Region::new(self.rungs[i].r, self.rungs[i].delta, self.gamma.clone())
    }

    /// The rung with the given `δ`, or the largest one below it.
    pub fn rung_for(&self, delta: f64) -> Option<usize> {
        self.rungs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.delta <= delta * (1.0 + 1e-12))
            .max_by(|a, b| a.1.delta.total_cmp(&b.1.delta))
            .map(|(i, _)| i)
    }

    pub fn c_phi(&self) -> f64 {
        self.rungs.iter().map(|r| r.checks.c_phi).fold(0.0, f64::max)
    }
}

/// Points of `∂K_{R,δ}` (two rays at angle `±3π/4` from `R` and the line
/// `Re u = -γ(δ)` beyond them) plus `u = R`.
pub fn boundary_sample(region: &Region, count: usize) -> Vec<C64> {
    let gam = region.gamma.eval(region.delta);
    let t_max = (region.r + gam) / FRAC_1_SQRT_2;
    let mut out = vec![C64::new(region.r, 0.0)];
    for j in 1..=count {
        let t = t_max * j as f64 / count as f64;
        for s in [1.0, -1.0] {
            out.push(region.r + C64::from_polar(t, s * 3.0 * FRAC_PI_4));
        }
    }
    let corner = region.r + gam;
    for k in 1..=3 {
        for s in [1.0, -1.0] {
            out.push(C64::new(-gam, s * corner * (1 << k) as f64));
        }
    }
    out
}

/// Residual checks over `boundary_sample × {|w| = δ}`.
pub fn rung_checks(chain: &ConjugationChain, region: &Region, opts: &CalibrationOptions) -> Result<RungChecks> {
    let lambda = chain.rot.lambda;
    let mut c = RungChecks {
        phi_shift: 0.0,
        phi_derivative: 0.0,
        step: 0.0,
        w_step: 0.0,
        tau_shift: 0.0,
        psi_shift: 0.0,
        c_phi: 0.0,
    };
    let dw = 1e-6 * region.delta;
    for u in boundary_sample(region, opts.boundary_points) {
        for k in 0..opts.w_angles {
            let w = C64::from_polar(region.delta, TAU * (k as f64 + 0.5) / opts.w_angles as f64);
            let q = UPoint::new(u, w);
            let phi = chain.phi_map(q)?;
            let shift = (phi.w - w).norm();
            c.phi_shift = c.phi_shift.max(shift);
            c.c_phi = c.c_phi.max(shift * u.norm());
            let inner = w * (1.0 - 1e-6);
            let dphi = (chain.phi_map(UPoint::new(u, inner))?.w - chain.phi_map(UPoint::new(u, inner - dw))?.w) / dw - 1.0;
            c.phi_derivative = c.phi_derivative.max(dphi.norm());
            c.psi_shift = c.psi_shift.max((chain.psi_map(q)?.u - u).norm());
            c.tau_shift = c.tau_shift.max((chain.tau_map(q)?.u - u).norm());
            let q1 = chain.g_tilde(q)?;
            c.step = c.step.max((q1.u - u - 1.0).norm());
            c.w_step = c.w_step.max((q1.w - lambda * w).norm());
        }
    }
    Ok(c)
}

/// For each `δ`, the smallest `R = r_start·2^j` whose residual checks pass.
pub fn calibrate(chain: &ConjugationChain, opts: &CalibrationOptions) -> Result<Calibration> {
    let gamma = chain.gamma.clone();
    let mut rungs = Vec::new();
    for &delta in &opts.deltas {
        let gam = gamma.eval(delta);
        let mut found = None;
        for j in 0..=opts.r_doublings {
            let region = Region::new(opts.r_start * (1u64 << j) as f64, delta, gamma.clone());
            // Evaluation failures at a small R only mean R is too small.
            if let Ok(checks) = rung_checks(chain, &region, opts) {
                if checks.pass(delta, gam) {
                    found = Some(Rung {
                        delta,
                        r: region.r,
                        gamma: gam,
                        checks,
                    });
                    break;
                }
            }
        }
        rungs.push(found.ok_or_else(|| Error::Calibration(format!("no R up to the search limit works for δ = {delta}")))?);
    }
    Ok(Calibration { rungs, gamma })
}

/// Everything needed to reproduce a chain and its calibrated constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainManifest {
    pub theta: f64,
    pub lambda: C64,
    pub continued_fraction: Vec<u64>,
    pub dio_c: f64,
    pub dio_r: f64,
    pub degree: usize,
    pub series_radius: f64,
    pub options: ChainOptions,
    pub a: C64,
    pub a_ring_mean: C64,
    pub h_series: TruncatedSeries,
    pub calibration: Option<Calibration>,
}

impl ChainManifest {
    pub fn new(chain: &ConjugationChain, calibration: Option<&Calibration>) -> Self {
        let mut cf = chain.rot.cf.clone();
        cf.truncate(16);
        Self {
            theta: chain.rot.theta.to_f64(),
            lambda: chain.rot.lambda,
            continued_fraction: cf,
            dio_c: chain.rot.dio_c,
            dio_r: chain.rot.dio_r,
            degree: chain.spec.f_series.degree(),
            series_radius: chain.spec.f_series.validity_radius,
            options: chain.opts.clone(),
            a: chain.a,
            a_ring_mean: chain.a_ring_mean,
            h_series: chain.h_series.clone(),
            calibration: calibration.cloned(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
