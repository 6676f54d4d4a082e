//! Numeric Fisher information of the escort Husimi family.
//!
//! Under `dμ = dΩ/(2π)` and after the azimuthal integral, the escort Husimi
//! density on the direction cosine `c` is proportional to `(1 + r c)^q`. The
//! `(q, r)` block is the covariance of the scores
//! `X = ln(1 + r c)` and `Y = q c/(1 + r c)`; the tangential coefficient is
//! `(q² r²/2) E[(1 − c²)/(1 + r c)²]`, which equals `r²((1 + r) f_F_q(W))⁻¹`.
//!
//! When the density is peaked (`(q + 1) r` large) the expectations are taken
//! in `u = t^{q+1}`, `t = (1 + r c)/(1 + r)`, under which the density is
//! uniform on `[W^{q+1}, 1]`.

use super::ffun::{f_eval, FFunctionId};
use super::tensor::{Coord, MetricTensor};
use crate::error::{domain, Error, Result};
use crate::models::EscortPoint;
use crate::quadrature::{integrate_1d_vec, Axis, VecResult};
use crate::special;

const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-18;

/// Below this `(q + 1) r` the moments are integrated directly in `c`.
const SMOOTH_LIMIT: f64 = 0.5;

/// The `(q, r)` block and the `dθ1²` coefficient at one `(q, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherBlock {
    pub qq: f64,
    pub qr: f64,
    pub rr: f64,
    pub tangential: f64,
}

impl FisherBlock {
    pub fn block_det(&self) -> f64 {
        self.qq * self.rr - self.qr * self.qr
    }

    /// `√det(q, r block) · g_θ1θ1`, i.e. the volume element without `sin θ1`.
    pub fn volume(&self) -> f64 {
        self.block_det().max(0.0).sqrt() * self.tangential
    }
}

fn check(q: f64, r: f64) -> Result<()> {
    check_c(q, r, 1.0 - r)
}

fn check_c(q: f64, r: f64, s: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return domain(format!("escort parameter {q} must be positive"));
    }
    if !(r > 0.0 && r <= 1.0 && s > 0.0 && s < 1.0) {
        return domain(format!("radius {r} (complement {s}) outside (0, 1)"));
    }
    Ok(())
}

fn require<const N: usize>(r: VecResult<N>) -> Result<[f64; N]> {
    if r.converged {
        return Ok(r.value);
    }
    let k = (0..N).max_by(|&a, &b| r.error[a].total_cmp(&r.error[b])).unwrap_or(0);
    Err(Error::QuadratureFailure { value: r.value[k], error: r.error[k], evals: r.evals })
}

/// Expectations `E[g(c)]` of the functions in `g` under the escort Husimi law.
fn expectations<const N: usize, G>(q: f64, r: f64, log_w: f64, g: G) -> Result<[f64; N]>
where
    G: Fn(f64, f64, f64) -> [f64; N] + Sync,
{
    // g receives (c, x, 1 + r c) with x = ln(1 + r c) up to an additive constant.
    if (q + 1.0) * r <= SMOOTH_LIMIT {
        let res = integrate_1d_vec(
            |c: f64| {
                let x = (r * c).ln_1p();
                let w = (q * x).exp();
                let v = g(c, x, 1.0 + r * c);
                let mut out = [0.0; N];
                for k in 0..N {
                    out[k] = v[k] * w;
                }
                out
            },
            Axis::new(-1.0, 1.0),
            REL_TOL,
            ABS_TOL,
        )?;
        let z = integrate_1d_vec(|c: f64| [(q * (r * c).ln_1p()).exp()], Axis::new(-1.0, 1.0), REL_TOL, ABS_TOL)?;
        let vals = require(res)?;
        let z = require(z)?[0];
        Ok(vals.map(|v| v / z))
    } else {
        let qp1 = q + 1.0;
        let lo = (qp1 * log_w).exp();
        let span = -(qp1 * log_w).exp_m1();
        let res = integrate_1d_vec(
            |u: f64| {
                let x = u.ln() / qp1;
                let t_m1 = x.exp_m1();
                let c = ((1.0 + r) * t_m1 + r) / r;
                // 1 + r c = (1 + r) e^x exactly; avoids cancellation near c = −1
                g(c.clamp(-1.0, 1.0), x, (1.0 + r) * x.exp())
            },
            Axis::new(lo, 1.0),
            REL_TOL,
            ABS_TOL,
        )?;
        Ok(require(res)?.map(|v| v / span))
    }
}

/// Numeric `(q, r)` block and tangential coefficient.
pub fn fisher_block(q: f64, r: f64) -> Result<FisherBlock> {
    fisher_block_c(q, r, 1.0 - r)
}

/// [`fisher_block`] with the complement `s = 1 − r` supplied, for states
/// closer to the pure-state sphere than `r` can resolve.
pub fn fisher_block_c(q: f64, r: f64, s: f64) -> Result<FisherBlock> {
    check_c(q, r, s)?;
    let lw = special::log_w_c(r, s);
    let score_r = move |c: f64, opc: f64| q * c / opc;
    let [mx, my] = expectations(q, r, lw, |c, x, opc| [x, score_r(c, opc)])?;
    let [qq, qr, rr] = expectations(q, r, lw, |c, x, opc| {
        let (dx, dy) = (x - mx, score_r(c, opc) - my);
        [dx * dx, dx * dy, dy * dy]
    })?;
    Ok(FisherBlock { qq, qr, rr, tangential: tangential_from_log_w(q, r, lw)? })
}

/// `r²((1 + r) f_F_q(W))⁻¹`.
pub fn fisher_tangential_closed(q: f64, r: f64) -> Result<f64> {
    check(q, r)?;
    tangential_from_log_w(q, r, special::log_w(r))
}

fn tangential_from_log_w(q: f64, r: f64, lw: f64) -> Result<f64> {
    let w = lw.exp();
    // f_F_q(t) → 1/q as t → 0
    let f = if w > 0.0 { f_eval(FFunctionId::FisherQ(q), w)? } else { 1.0 / q };
    Ok(r * r / ((1.0 + r) * f))
}

/// `(q² r²/2) E[(1 − c²)/(1 + r c)²]` by quadrature.
pub fn fisher_tangential_numeric(q: f64, r: f64) -> Result<f64> {
    check(q, r)?;
    let [e] = expectations(q, r, special::log_w(r), |c, _, opc| [(1.0 - c * c) / (opc * opc)])?;
    Ok(0.5 * q * q * r * r * e)
}

/// Fisher metric of the escort Husimi family over `(q, r, θ1, θ2)`.
pub fn fisher_numeric(p: &EscortPoint<f64>) -> Result<MetricTensor<f64>> {
    let b = fisher_block(p.q, p.base.r)?;
    let s2 = p.base.theta1.sin().powi(2);
    Ok(MetricTensor::from_parts(
        vec![Coord::Q, Coord::R, Coord::Theta1, Coord::Theta2],
        &[b.qq, b.rr, b.tangential, b.tangential * s2],
        &[(0, 1, b.qr)],
    ))
}
