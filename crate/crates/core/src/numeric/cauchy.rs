//! Discrete Cauchy integrals: Taylor coefficients and winding numbers from
//! equispaced samples on a circle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::scalar::C64;

fn ring(center: C64, radius: f64, m: usize) -> impl Iterator<Item = (C64, C64)> {
    (0..m).map(move |j| {
        let e = C64::from_polar(1.0, TAU * j as f64 / m as f64);
        (e, center + e * radius)
    })
}

/// First `count` Taylor coefficients of `f` at `center` from `m` samples on
/// the circle of the given radius (trapezoidal rule, aliasing error of order
/// `radius^m`).
pub fn taylor_coefficients<F>(f: F, center: C64, radius: f64, m: usize, count: usize) -> Vec<C64>
where
    F: Fn(C64) -> C64,
{
    assert!(count <= m, "cannot resolve more coefficients than samples");
    let samples: Vec<(C64, C64)> = ring(center, radius, m).map(|(e, z)| (e, f(z))).collect();
    coefficients_from_samples(&samples, radius, count)
}

/// Coefficients from precomputed `(e^{i t_j}, f(center + r e^{i t_j}))` pairs.
pub fn coefficients_from_samples(samples: &[(C64, C64)], radius: f64, count: usize) -> Vec<C64> {
    let m = samples.len() as f64;
    (0..count)
        .map(|k| {
            let s: C64 = samples.iter().map(|&(e, v)| v * e.powi(-(k as i32))).sum();
            s / (m * radius.powi(k as i32))
        })
        .collect()
}

/// The single coefficient of `(z - center)^k`.
pub fn taylor_coefficient<F>(f: F, center: C64, radius: f64, m: usize, k: usize) -> C64
where
    F: Fn(C64) -> C64,
{
    let mut acc = C64::new(0.0, 0.0);
    for (e, z) in ring(center, radius, m) {
        acc += f(z) * e.powi(-(k as i32));
    }
    acc / (m as f64 * radius.powi(k as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winding {
    Count(i64),
    /// A sample came too close to zero or the phase jumped by more than a
    /// quarter turn between neighbours.
    Inconclusive,
}

/// Winding number of `f(z) - target` around the circle, counted by summing
/// phase increments between consecutive samples.
pub fn winding_number<F>(f: F, center: C64, radius: f64, m: usize, target: C64, min_modulus: f64) -> Winding
where
    F: Fn(C64) -> C64,
{
    let vals: Vec<C64> = ring(center, radius, m).map(|(_, z)| f(z) - target).collect();
    if vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite() || v.norm() < min_modulus) {
        return Winding::Inconclusive;
    }
    let mut total = 0.0;
    for j in 0..m {
        let d = (vals[(j + 1) % m] / vals[j]).arg();
        if d.abs() > PI / 2.0 {
            return Winding::Inconclusive;
        }
        total += d;
    }
    Winding::Count((total / TAU).round() as i64)
}
