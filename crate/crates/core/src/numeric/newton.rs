//! Damped Newton iteration for scalar complex equations.

use super::scalar::C64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Solves `g(x) = 0` from `x0`, where `g` returns the value and derivative.
///
/// A step is halved (up to 30 times) until the residual decreases. Returns
/// the root once `|g| <= tol * max(1, scale)`. An error from `g` at the
/// starting point aborts the solve; during line search it counts as a
/// rejected step.
pub fn damped_newton<G>(mut g: G, x0: C64, scale: f64, opts: NewtonOptions) -> Result<C64>
where
    G: FnMut(C64) -> Result<(C64, C64)>,
{
    let mut x = x0;
    let (mut val, mut der) = g(x)?;
    let target = opts.tol * scale.max(1.0);
    for _ in 0..opts.max_iter {
        if val.norm() <= target {
            return Ok(x);
        }
        if der.norm() == 0.0 || !der.re.is_finite() || !der.im.is_finite() {
            break;
        }
        let step = val / der;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = x - step * t;
            if let Ok((v, d)) = g(cand) {
                if v.norm() < val.norm() || v.norm() <= target {
                    accepted = Some((cand, v, d));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, v, d)) = accepted else { break };
        x = cand;
        val = v;
        der = d;
    }
    if val.norm() <= target {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: val.norm(),
    })
}

/// Same as [`damped_newton`] with a central-difference derivative.
pub fn damped_newton_fd<G>(mut g: G, x0: C64, scale: f64, opts: NewtonOptions) -> Result<C64>
where
    G: FnMut(C64) -> Result<C64>,
{
    damped_newton(
        |x| {
            let h = 1e-6 * x.norm().max(1.0);
            let v = g(x)?;
            let d = (g(x + h)? - g(x - h)?) / (2.0 * h);
            Ok((v, d))
        },
        x0,
        scale,
        opts,
    )
}
