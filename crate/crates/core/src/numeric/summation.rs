//! Oscillatory sums over powers of a unit multiplier.
//!
//! The small-divisor sums `sum_{j>=m} mu^j / (u + j)` with `|mu| = 1` converge
//! only conditionally. They are evaluated as a direct block of terms followed
//! by Abel summation of the tail: with `a_j = 1/(v + j)`,
//!
//! ```text
//! sum_j mu^j a_j = sum_p mu^p (Delta^p a)_0 / (1 - mu)^{p+1},
//! (Delta^p a)_0 = (-1)^p p! / (v (v+1) ... (v+p)),
//! ```
//!
//! and the remainder after `q` levels is bounded by
//! `q! |1-mu|^{-q} (|v|^{-(q+1)} + 1/(q (Re v)^q))`.

use super::scalar::C64;
use crate::error::{Error, Result};

/// Below this `|lambda^n - 1|` the multiplier is treated as resonant.
pub const SMALL_DIVISOR_CUTOFF: f64 = 1e-8;

/// `z^n` by binary exponentiation, negative `n` through the reciprocal.
pub fn cpow(z: C64, n: i64) -> C64 {
    let mut base = if n < 0 { z.inv() } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = C64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `sum_{j=m}^{N} mu^j` from the three powers `mu`, `mu^m`, `mu^{N+1}`.
pub fn geometric_block(mu: C64, mu_m: C64, mu_n1: C64) -> Option<C64> {
    let d = mu - 1.0;
    (d.norm() > SMALL_DIVISOR_CUTOFF).then(|| (mu_n1 - mu_m) / d)
}

/// `sum_{j=m}^{N} lambda^{jn}`.
///
/// Closed form when `|lambda^n - 1|` exceeds the small-divisor cutoff,
/// direct accumulation otherwise.
pub fn lambda_partial_sum(lambda: C64, n: i64, m: u64, big_n: u64) -> C64 {
    assert!(big_n >= m, "empty range m > N");
    let mu = cpow(lambda, n);
    let mu_m = cpow(mu, m as i64);
    if let Some(s) = geometric_block(mu, mu_m, cpow(mu, big_n as i64 + 1)) {
        return s;
    }
    let mut term = mu_m;
    let mut acc = C64::new(0.0, 0.0);
    for _ in m..=big_n {
        acc += term;
        term *= mu;
    }
    acc
}

/// How many Abel levels to apply to the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbelOrder {
    Fixed(u32),
    /// Keep adding levels while they shrink, up to the given cap.
    Adaptive(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallDivisorSum {
    pub value: C64,
    pub tail_estimate: f64,
}

/// `sum_{j>=m} lambda^{nj} / (u + j)`: `K+1` direct terms `j = m..=m+K`,
/// then one Abel level on the remainder.
///
/// `tail_estimate` bounds the error of the Abel-summed tail; it is of the
/// form `C / |u + m + K|` with `C` proportional to `1/|lambda^n - 1|`.
pub fn small_divisor_sum(lambda: C64, n: i64, u: C64, m: u64, k: u64) -> Result<SmallDivisorSum> {
    small_divisor_sum_mu(cpow(lambda, n), n, u, m, k, AbelOrder::Fixed(1))
}

/// Same sum with `mu = lambda^n` supplied directly and a chosen Abel order.
pub fn small_divisor_sum_mu(
    mu: C64,
    n: i64,
    u: C64,
    m: u64,
    k: u64,
    order: AbelOrder,
) -> Result<SmallDivisorSum> {
    let one_minus = C64::new(1.0, 0.0) - mu;
    if one_minus.norm() <= SMALL_DIVISOR_CUTOFF {
        return Err(Error::SmallDivisor {
            n,
            modulus: one_minus.norm(),
        });
    }
    let first = u + m as f64;
    if first.im.abs() < 1e-12 && first.re <= 1e-12 && (first.re - first.re.round()).abs() < 1e-12 {
        return Err(Error::Domain(format!("pole of 1/(u+j) on the ray at u = {u}")));
    }
    let v = first + (k + 1) as f64;
    if v.re <= 0.0 {
        return Err(Error::Domain(format!(
            "tail start Re(u+m+K+1) = {} is not positive",
            v.re
        )));
    }

    let mut term = cpow(mu, m as i64);
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=k {
        acc += term / (first + j as f64);
        term *= mu;
    }
    // `term` is now mu^{m+K+1}.
    let (tail, q) = abel_tail(mu, one_minus, v, term, order);
    Ok(SmallDivisorSum {
        value: acc + tail,
        tail_estimate: abel_remainder_bound(one_minus.norm(), v, q),
    })
}

/// Abel-summed `sum_{j>=0} mu^{s+j}/(v+j)` with `mu_s = mu^s`.
/// Returns the partial value and the number of levels used.
pub fn abel_tail(mu: C64, one_minus: C64, v: C64, mu_s: C64, order: AbelOrder) -> (C64, u32) {
    let mut t = mu_s / (one_minus * v);
    let mut acc = t;
    let (max, adaptive) = match order {
        AbelOrder::Fixed(q) => (q, false),
        AbelOrder::Adaptive(q) => (q, true),
    };
    if max == 0 {
        return (C64::new(0.0, 0.0), 0);
    }
    let mut q = 1;
    while q < max {
        let next = t * (-mu * q as f64) / (one_minus * (v + q as f64));
        if adaptive && next.norm() >= t.norm() {
            break;
        }
        acc += next;
        t = next;
        q += 1;
        if adaptive && t.norm() <= 1e-18 * acc.norm() {
            break;
        }
    }
    (acc, q)
}

/// Rigorous bound on the Abel remainder after `q` levels.
pub fn abel_remainder_bound(abs_one_minus: f64, v: C64, q: u32) -> f64 {
    if q == 0 {
        return f64::INFINITY;
    }
    let qf = q as f64;
    let fact: f64 = (1..=q).map(|i| i as f64).product();
    fact / abs_one_minus.powi(q as i32) * (v.norm().powi(-(q as i32 + 1)) + 1.0 / (qf * v.re.powi(q as i32)))
}

/// Plain truncation `sum_{j=m}^{m+K} mu^j/(u+j)` with no tail model.
pub fn plain_truncated_sum(mu: C64, u: C64, m: u64, k: u64) -> C64 {
    let mut term = cpow(mu, m as i64);
    let mut acc = C64::new(0.0, 0.0);
    for j in m..=m + k {
        acc += term / (u + j as f64);
        term *= mu;
    }
    acc
}
