//! Sampling scans for identically vanishing metric determinants.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tensor::MetricTensor;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub samples: usize,
    /// Largest `|det g| / |Π g_ii|` over evaluated points.
    pub max_ratio: f64,
    pub argmax: Vec<f64>,
    /// Points at which the metric could not be evaluated.
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl DegeneracyReport {
    pub fn is_null(&self, tol: f64) -> bool {
        self.failures < self.samples && self.max_ratio < tol
    }
}

/// Evaluates `source` at `n` points drawn by `sampler` from a ChaCha8 stream
/// seeded with `seed`. Points are drawn serially and evaluated in parallel.
pub fn degeneracy_scan<M, S>(source: M, mut sampler: S, n: usize, seed: u64) -> Result<DegeneracyReport>
where
    M: Fn(&[f64]) -> Result<MetricTensor<f64>> + Sync,
    S: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    if n == 0 {
        return domain("degeneracy scan needs at least one sample");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n).map(|_| sampler(&mut rng)).collect();
    let ratios: Vec<Result<f64>> = points
        .par_iter()
        .map(|p| source(p).map(|g| g.degeneracy_ratio()))
        .collect();
    let mut report = DegeneracyReport {
        samples: n,
        max_ratio: 0.0,
        argmax: Vec::new(),
        failures: 0,
        first_failure: None,
    };
    for (p, r) in points.iter().zip(ratios) {
        match r {
            Ok(v) if !(v <= report.max_ratio) => {
                report.max_ratio = v;
                report.argmax = p.clone();
            }
            Ok(_) => {}
            Err(e) => {
                report.failures += 1;
                report.first_failure.get_or_insert_with(|| format!("{e} at {p:?}"));
            }
        }
    }
    Ok(report)
}

fn angles(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.gen_range(0.2..PI - 0.2), rng.gen_range(0.0..2.0 * PI))
}

/// `(r, θ1, θ2)` in the interior of the Bloch ball.
pub fn sample_bloch(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = rng.gen_range(0.05..0.95);
    let (t1, t2) = angles(rng);
    vec![r, t1, t2]
}

/// `(q, r, θ1, θ2)` with `q ∈ [1/2, 10]`.
pub fn sample_escort(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let q = rng.gen_range(0.5..10.0);
    let mut v = sample_bloch(rng);
    v.insert(0, q);
    v
}

/// `(v, r, θ1, θ2)` with `0 < r < v < 1` kept away from the boundaries.
pub fn sample_spin1(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v = rng.gen_range(0.2..0.9);
    let r = v * rng.gen_range(0.1..0.9);
    let (t1, t2) = angles(rng);
    vec![v, r, t1, t2]
}

/// `(q, v, r, θ1, θ2)` with `q ∈ [1/2, 5]`.
pub fn sample_spin1_escort(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let q = rng.gen_range(0.5..5.0);
    let mut v = sample_spin1(rng);
    v.insert(0, q);
    v
}

/// `(b_q, σ_q²)` inside the Abe-Rajagopal metric domain.
pub fn sample_aberaj(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s = rng.gen_range(0.5..7.5);
    let bmax = 0.95 * s / (2.0 * std::f64::consts::SQRT_2);
    vec![rng.gen_range(-bmax..bmax), s]
}
