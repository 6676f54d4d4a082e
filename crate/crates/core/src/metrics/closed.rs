//! Closed-form metric catalog.
//!
//! The tangential part `dn²` is `r² dθ1² + r² sin²θ1 dθ2²` throughout.

use super::ffun::{f_eval, FFunctionId};
use super::tensor::{Coord, MetricTensor};
use crate::error::{domain, Result};
use crate::models::{AbeRajPoint, BlochPoint, EscortPoint, SpinOneFamilyPoint};
use crate::scalar::{c, Scalar};
use crate::special;

fn interior<T: Scalar>(r: T) -> Result<()> {
    if !(r > T::zero() && r < T::one()) {
        return domain(format!("radius {r} is a coordinate singularity; need 0 < r < 1"));
    }
    Ok(())
}

fn angular<T: Scalar>(coef: T, theta1: T) -> (T, T) {
    (coef, coef * theta1.sin().powi(2))
}

/// 3D Bures metric of the Bloch ball over `(r, θ1, θ2)`:
/// `dr²/(4(1 − r²)) + dn²/4`.
pub fn bures_bloch_closed<T: Scalar>(p: &BlochPoint<T>) -> Result<MetricTensor<T>> {
    let r = p.r;
    if !(r < T::one()) {
        return domain("Bures metric is singular on the pure-state boundary r = 1");
    }
    let quarter = c::<T>(0.25);
    let (g1, g2) = angular(quarter * r * r, p.theta1);
    Ok(MetricTensor::from_parts(
        vec![Coord::R, Coord::Theta1, Coord::Theta2],
        &[quarter / (T::one() - r * r), g1, g2],
        &[],
    ))
}

/// Escort-extended Bures metric over `(q, r, θ1, θ2)`.
///
/// With `truncated` the `dq dr` entry is dropped; the untruncated `(q, r)`
/// block is rank one.
pub fn bures_extended_closed<T: Scalar>(
    p: &EscortPoint<T>,
    truncated: bool,
) -> Result<MetricTensor<T>> {
    let (q, r) = (p.q, p.base.r);
    interior(r)?;
    let lw = special::log_w(r);
    let wq_m1 = (q * lw).exp_m1();
    let wq = wq_m1 + T::one();
    let den = c::<T>(4.0) * (T::one() + wq).powi(2);
    let r2m1 = r * r - T::one();
    let gqq = wq * lw * lw / den;
    let gqr = c::<T>(2.0) * q * wq * lw / (r2m1 * den);
    let grr = c::<T>(4.0) * q * q * wq / (r2m1 * r2m1 * den);
    let (g1, g2) = angular(wq_m1 * wq_m1 / den, p.base.theta1);
    let off = if truncated { vec![] } else { vec![(0, 1, gqr)] };
    Ok(MetricTensor::from_parts(
        vec![Coord::Q, Coord::R, Coord::Theta1, Coord::Theta2],
        &[gqq, grr, g1, g2],
        &off,
    ))
}

/// `((1 + r) f_Bures_q(W))⁻¹`, which equals the `dθ1²` entry of the
/// escort-extended Bures metric (the printed `dn²` coefficient times `r²`).
pub fn bures_extended_tangential<T: Scalar>(q: T, r: T) -> Result<T> {
    interior(r)?;
    let f = f_eval(FFunctionId::BuresQ(q), special::w_ratio(r))?;
    Ok(T::one() / ((T::one() + r) * f))
}

/// 3D Fisher metric of the Husimi distribution over `(r, θ1, θ2)`.
pub fn fisher_husimi_closed<T: Scalar>(p: &BlochPoint<T>) -> Result<MetricTensor<T>> {
    if !(p.r < T::one()) {
        return domain("Husimi Fisher metric diverges at r = 1");
    }
    let a = special::husimi_tangential(p.r);
    let (g1, g2) = angular(a, p.theta1);
    Ok(MetricTensor::from_parts(
        vec![Coord::R, Coord::Theta1, Coord::Theta2],
        &[special::husimi_radial(p.r), g1, g2],
        &[],
    ))
}

/// q-extended Husimi Fisher metric at `q = 1` over `(q, r, θ1, θ2)`, including
/// the `dq²` and `dq dr` terms.
pub fn fisher_husimi_extended_q1_closed<T: Scalar>(p: &BlochPoint<T>) -> Result<MetricTensor<T>> {
    interior(p.r)?;
    let r = p.r;
    let a = special::husimi_tangential(r);
    let (g1, g2) = angular(a, p.theta1);
    Ok(MetricTensor::from_parts(
        vec![Coord::Q, Coord::R, Coord::Theta1, Coord::Theta2],
        &[special::husimi_q1_qq(r), special::husimi_radial(r), g1, g2],
        &[(0, 1, special::husimi_q1_qr(r))],
    ))
}

/// Bures metric of the 3×3 family over `(v, r, θ1, θ2)`.
///
/// The printed `dv dr` coefficient `r/(r² − v²)` (inside the overall 1/4) is
/// the symmetric entry itself: this is what the eigenbasis sum produces and
/// what reproduces the family's normalized prior.
pub fn spin1_bures_closed<T: Scalar>(p: &SpinOneFamilyPoint<T>) -> Result<MetricTensor<T>> {
    let (v, r) = (p.v, p.r);
    if !(r > T::zero() && r < v && v < T::one()) {
        return domain(format!("need 0 < r < v < 1, got r = {r}, v = {v}"));
    }
    let quarter = c::<T>(0.25);
    let d = r * r - v * v;
    let gvv = quarter * (r * r - v) / ((T::one() - v) * d);
    let gvr = quarter * r / d;
    let grr = -quarter * v / d;
    let (g1, g2) = angular(quarter * r * r / v, p.theta1);
    Ok(MetricTensor::from_parts(
        vec![Coord::V, Coord::R, Coord::Theta1, Coord::Theta2],
        &[gvv, grr, g1, g2],
        &[(0, 1, gvr)],
    ))
}

/// `dn²` coefficient of the escort-extended 3×3 family.
pub fn spin1_qext_tangential<T: Scalar>(p: &SpinOneFamilyPoint<T>, q: T) -> Result<T> {
    let (v, r) = (p.v, p.r);
    if !(r > T::zero() && r < v && v < T::one()) {
        return domain(format!("need 0 < r < v < 1, got r = {r}, v = {v}"));
    }
    if !(q > T::zero()) {
        return domain(format!("escort parameter {q} must be positive"));
    }
    let lo = (v - r).powf(q);
    let hi = (v + r).powf(q);
    let mid = (c::<T>(2.0) - c::<T>(2.0) * v).powf(q);
    Ok((lo - hi).powi(2) / (c::<T>(4.0) * r * r * (lo + hi) * (mid + lo + hi)))
}

struct AbeRajLogs<T> {
    minus: T,
    plus: T,
    eight: T,
}

fn aberaj_logs<T: Scalar>(p: &AbeRajPoint<T>) -> Result<AbeRajLogs<T>> {
    let k = c::<T>(2.0 * std::f64::consts::SQRT_2) * p.b_q;
    let s = p.sigma_q2;
    let args = [s - k, s + k, c::<T>(8.0) - s];
    if args.iter().any(|&a| !(a > T::zero())) {
        return domain(format!(
            "non-positive logarithm argument at (b_q, σ_q²) = ({}, {s})",
            p.b_q
        ));
    }
    Ok(AbeRajLogs { minus: args[0].ln(), plus: args[1].ln(), eight: args[2].ln() })
}

/// Abe-Rajagopal Bures metric at `q = 1` over `(q, b_q, σ_q²)`.
pub fn aberaj_metric_q1<T: Scalar>(p: &AbeRajPoint<T>) -> Result<MetricTensor<T>> {
    let l = aberaj_logs(p)?;
    let (b, s) = (p.b_q, p.sigma_q2);
    let sqrt2 = T::SQRT_2();
    let (two, four, eight) = (c::<T>(2.0), c::<T>(4.0), c::<T>(8.0));
    let s_m8 = s - eight;
    let cc = -four * l.eight.powi(2) * s * s_m8
        + two * l.minus * l.plus * (eight * b * b - s.powi(2))
        - l.minus.powi(2) * (eight * b * b + s * (s - c(16.0)) - four * sqrt2 * b * s_m8)
        - l.plus.powi(2) * (eight * b * b + s * (s - c(16.0)) + four * sqrt2 * b * s_m8)
        + four * l.eight * s_m8
            * (l.minus * (s - two * sqrt2 * b) + l.plus * (s + two * sqrt2 * b));
    let gqq = cc / c(1024.0);
    let gqb = (l.minus - l.plus) / (c::<T>(16.0) * sqrt2);
    let gqs = (two * l.eight - l.minus - l.plus) / c(64.0);
    let gbb = s / (c::<T>(-32.0) * b * b + four * s * s);
    let gbs = b / (two * (c::<T>(16.0) * b * b - two * s * s));
    let gss = (b * b - s) / (four * s_m8 * (s * s - eight * b * b));
    Ok(MetricTensor::from_parts(
        vec![Coord::Q, Coord::Bq, Coord::SigmaQ2],
        &[gqq, gbb, gss],
        &[(0, 1, gqb), (0, 2, gqs), (1, 2, gbs)],
    ))
}

/// Which reading of the printed `(−8 + σ_q)` factor in the 2D volume element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbeRajVariant {
    /// `(−8 + σ_q)` with `σ_q = √σ_q²`, as printed.
    AsPrinted,
    /// `(−8 + σ_q²)`.
    SigmaSquared,
}

/// `√(−1/((−8 + ·)(−8 b_q² + σ_q⁴)))/4`.
pub fn aberaj_volume_printed<T: Scalar>(p: &AbeRajPoint<T>, variant: AbeRajVariant) -> Result<T> {
    let (b, s) = (p.b_q, p.sigma_q2);
    let first = match variant {
        AbeRajVariant::AsPrinted => s.sqrt() - c(8.0),
        AbeRajVariant::SigmaSquared => s - c(8.0),
    };
    let inner = -T::one() / (first * (s * s - c::<T>(8.0) * b * b));
    if !(inner >= T::zero()) {
        return domain("volume element radicand is negative");
    }
    Ok(inner.sqrt() * c(0.25))
}
