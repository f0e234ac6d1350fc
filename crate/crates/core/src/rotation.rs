//! Rotation numbers `theta`, their multipliers `lambda = e^{2 pi i theta}`,
//! and empirical Diophantine constants.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ComplexDD, DoubleDouble, C64};

/// Below this value of `min n^r |lambda^n - 1|` a rotation is reported as
/// effectively resonant.
pub const RESONANCE_THRESHOLD: f64 = 1e-12;

/// Range over which `dio_c` is fitted at construction.
pub const DEFAULT_CERTIFIED_RANGE: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    /// `theta` in `[0, 1)`, kept in double-double so that `frac(n theta)`
    /// stays accurate for large `n`.
    pub theta: DoubleDouble,
    pub lambda: C64,
    /// Partial quotients `a_1, a_2, ...` of `theta = [0; a_1, a_2, ...]`.
    pub cf: Vec<u64>,
    pub dio_c: f64,
    pub dio_r: f64,
    pub certified_range: u64,
}

/// `[0; a_1, ..., a_k]` by backward recursion.
fn eval_cf(cf: &[u64]) -> DoubleDouble {
    let mut x: Option<DoubleDouble> = None;
    for &a in cf.iter().rev() {
        let a = DoubleDouble::from(a as f64);
        x = Some(match x {
            None => a,
            Some(t) => a + t.recip(),
        });
    }
    match x {
        None => DoubleDouble::ZERO,
        Some(t) => t.recip(),
    }
}

/// `|lambda^n - 1| = 2 sin(pi * dist(n theta, Z))`.
fn dist_to_one(theta: DoubleDouble, n: u64) -> f64 {
    let t = (DoubleDouble::from(n as f64) * theta).fract().to_f64();
    let d = t.min(1.0 - t);
    2.0 * (std::f64::consts::PI * d).sin()
}

impl RotationNumber {
    /// Builds the rotation for a given `theta` and fits `dio_c` at the given
    /// exponent over `1..=DEFAULT_CERTIFIED_RANGE`.
    pub fn from_theta(theta: DoubleDouble, cf: Vec<u64>, dio_r: f64) -> Self {
        let theta = theta.fract();
        let mut rot = Self {
            theta,
            lambda: C64::new(1.0, 0.0),
            cf,
            dio_c: 0.0,
            dio_r,
            certified_range: DEFAULT_CERTIFIED_RANGE,
        };
        rot.lambda = rot.lambda_power(1);
        rot.dio_c = rot.min_scaled_distance(dio_r, DEFAULT_CERTIFIED_RANGE);
        rot
    }

    /// Rotation from continued-fraction partial quotients. With `periodic`
    /// the block is repeated forever (a quadratic irrational); otherwise the
    /// list is taken as finite and `theta` is rational.
    pub fn from_cf(block: &[u64], periodic: bool) -> Result<Self> {
        if block.is_empty() || block.contains(&0) {
            return Err(Error::Domain(
                "continued fraction needs at least one entry, all positive".into(),
            ));
        }
        let (theta, stored) = if periodic {
            let expanded: Vec<u64> = block.iter().copied().cycle().take(200.max(block.len())).collect();
            let reps = 40usize.div_ceil(block.len());
            (eval_cf(&expanded), block.repeat(reps))
        } else {
            (eval_cf(block), block.to_vec())
        };
        Ok(Self::from_theta(theta, stored, 1.0))
    }

    /// The rotation `1 - theta`, whose multiplier is the complex conjugate.
    pub fn conjugate(&self) -> Self {
        let theta = DoubleDouble::ONE - self.theta;
        let cf = match self.cf.as_slice() {
            [] => vec![],
            [1] => vec![1],
            [1, a2, rest @ ..] => std::iter::once(a2 + 1).chain(rest.iter().copied()).collect(),
            [a1, rest @ ..] => [1, a1 - 1].into_iter().chain(rest.iter().copied()).collect(),
        };
        Self::from_theta(theta, cf, self.dio_r)
    }

    /// `lambda^n` from `frac(n theta)`, so no multiplicative drift builds up.
    /// Negative powers are exact conjugates of positive ones.
    pub fn lambda_power(&self, n: i64) -> C64 {
        lambda_power_of(self.theta, n)
    }

    /// `lambda^n` in double-double.
    pub fn lambda_power_dd(&self, n: i64) -> ComplexDD {
        let t = (DoubleDouble::from(n.unsigned_abs() as f64) * self.theta).fract();
        let z = ComplexDD::cis_turns(t);
        if n < 0 {
            z.conj()
        } else {
            z
        }
    }

    fn min_scaled_distance(&self, r: f64, n_max: u64) -> f64 {
        (1..=n_max)
            .map(|n| (n as f64).powf(r) * dist_to_one(self.theta, n))
            .fold(f64::INFINITY, f64::min)
    }

    /// True if the fitted constant says the rotation is effectively rational.
    pub fn is_resonant(&self) -> bool {
        self.dio_c < RESONANCE_THRESHOLD
    }
}

/// `e^{2πi nθ}` from `frac(nθ)` in double-double.
pub fn lambda_power_of(theta: DoubleDouble, n: i64) -> C64 {
    let t = frac_turns(theta, n.unsigned_abs());
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    if n < 0 {
        C64::new(c, -s)
    } else {
        C64::new(c, s)
    }
}

/// `frac(n theta)` shifted into `[-1/2, 1/2)`.
fn frac_turns(theta: DoubleDouble, n: u64) -> f64 {
    assert!(n <= 1 << 53, "|n| must not exceed 2^53");
    let t = (DoubleDouble::from(n as f64) * theta).fract();
    let t = if t.hi >= 0.5 { t - DoubleDouble::ONE } else { t };
    t.to_f64()
}

/// The golden-mean rotation `theta = (sqrt 5 - 1)/2 = [0; 1, 1, 1, ...]`.
pub fn golden_rotation() -> RotationNumber {
    static GOLDEN: OnceLock<RotationNumber> = OnceLock::new();
    GOLDEN
        .get_or_init(|| {
            let five = DoubleDouble::from(5.0);
            let theta = (five.sqrt() - DoubleDouble::ONE) / DoubleDouble::from(2.0);
            RotationNumber::from_theta(theta, vec![1; 40], 1.0)
        })
        .clone()
}

/// `c = min_{1<=n<=N_max} n^r |lambda^n - 1|`; an error if it falls below
/// [`RESONANCE_THRESHOLD`].
pub fn diophantine_fit(rot: &RotationNumber, r: f64, n_max: u64) -> Result<f64> {
    assert!(n_max >= 1);
    let c = rot.min_scaled_distance(r, n_max);
    if c < RESONANCE_THRESHOLD {
        return Err(Error::Resonant(c));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBoundReport {
    /// Largest `|sum_{j=m}^N lambda^{jn}| |lambda^n - 1| / 2` seen.
    pub max_ratio: f64,
    pub worst: (u64, u64, u64),
    /// First `n` with `lambda^n` numerically equal to 1, if any.
    pub resonant_n: Option<u64>,
    pub pass: bool,
}

/// Default starting indices of the partial sums.
pub const SUM_BOUND_OFFSETS: [u64; 3] = [0, 17, 500];

/// Checks `|sum_{j=m}^N lambda^{jn}| <= 2/|lambda^n - 1|` by running
/// accumulation over every `N <= N_max`, for `n <= n_max` and `m` in
/// [`SUM_BOUND_OFFSETS`].
pub fn verify_sum_bound(rot: &RotationNumber, n_max: u64, big_n_max: u64) -> SumBoundReport {
    verify_sum_bound_with(rot, n_max, big_n_max, &SUM_BOUND_OFFSETS)
}

pub fn verify_sum_bound_with(rot: &RotationNumber, n_max: u64, big_n_max: u64, offsets: &[u64]) -> SumBoundReport {
    use rayon::prelude::*;

    let per_n: Vec<(f64, (u64, u64, u64), bool)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let divisor = (rot.lambda_power(n as i64) - 1.0).norm();
            let resonant = divisor <= crate::numeric::summation::SMALL_DIVISOR_CUTOFF;
            let mut best = (0.0, (n, 0, 0));
            for &m in offsets.iter().filter(|&&m| m <= big_n_max) {
                let mu = rot.lambda_power(n as i64);
                let mut acc = C64::new(0.0, 0.0);
                let mut term = C64::new(0.0, 0.0);
                for j in m..=big_n_max {
                    if (j - m) % 1024 == 0 {
                        term = rot.lambda_power((j * n) as i64);
                    }
                    acc += term;
                    term *= mu;
                    let ratio = if resonant {
                        if acc.norm() > 2.0 { f64::INFINITY } else { 0.0 }
                    } else {
                        acc.norm() * divisor / 2.0
                    };
                    if ratio > best.0 {
                        best = (ratio, (n, m, j));
                    }
                }
            }
            (best.0, best.1, resonant)
        })
        .collect();

    let mut report = SumBoundReport {
        max_ratio: 0.0,
        worst: (0, 0, 0),
        resonant_n: None,
        pass: true,
    };
    for (n, (ratio, at, resonant)) in per_n.into_iter().enumerate() {
        if resonant && report.resonant_n.is_none() {
            report.resonant_n = Some(n as u64 + 1);
        }
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst = at;
        }
    }
    report.pass = report.max_ratio <= 1.0 + 1e-9;
    report
}
