//! Operator-monotone style functions `f(t)` giving tangential metric
//! components `((1 + r) f(W))⁻¹`.
//!
//! The Husimi family `f_F_q` is evaluated through the identity
//! `f_F_q(t) = −(1 − t)² / ((1 + t) q (v R − 1))` with `a = −ln t / 2`,
//! `u = q − 1`, `v = q + 1` and `R = sinh(|u| a)/(|u| sinh(v a))`, which has no
//! removable singularity at `q = 1` or `t = 1`. `v R − 1` is summed from its
//! series when `v a` is small.

use crate::error::{domain, Result};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FFunctionId<T: Scalar> {
    /// Bures, `(1 + t)/2`.
    Bures,
    /// Tangential function of the escort-extended Bures metric.
    BuresQ(T),
    /// Fisher metric of the Husimi family.
    Fisher,
    /// Fisher metric of the escort Husimi family.
    FisherQ(T),
}

pub fn f_eval<T: Scalar>(id: FFunctionId<T>, t: T) -> Result<T> {
    if !(t > T::zero() && t <= T::one()) {
        return domain(format!("f-function argument {t} outside (0, 1]"));
    }
    match id {
        FFunctionId::Bures => Ok((T::one() + t) * c(0.5)),
        FFunctionId::BuresQ(q) => f_bures_q(t, q),
        FFunctionId::Fisher => Ok(f_fisher_q(t, T::one())),
        FFunctionId::FisherQ(q) => {
            if !(q > T::zero()) {
                return domain(format!("escort parameter {q} must be positive"));
            }
            Ok(f_fisher_q(t, q))
        }
    }
}

/// `2 (1 + t)(1 + t^q)² / (t^q − 1)²`; unbounded at `t = 1`.
fn f_bures_q<T: Scalar>(t: T, q: T) -> Result<T> {
    let lt = t.ln();
    let tq_m1 = (q * lt).exp_m1();
    if tq_m1 == T::zero() {
        return domain("f_Bures_q is unbounded at t = 1");
    }
    let tq = tq_m1 + T::one();
    Ok(c::<T>(2.0) * (T::one() + t) * (T::one() + tq).powi(2) / tq_m1.powi(2))
}

/// `sinh(z a)/z`, equal to `a` at `z = 0`; `(1 − e^{−2 z a})/(2z)` scaled form for large arguments.
fn sinhc<T: Scalar>(z: T, a: T) -> T {
    if z == T::zero() {
        a
    } else {
        (z * a).sinh() / z
    }
}

/// `v R − 1 = v sinh(|u| a)/(|u| sinh(v a)) − 1`.
fn v_ratio_minus_one<T: Scalar>(u: T, v: T, a: T) -> T {
    let va = v * a;
    let u = u.abs();
    if va <= T::one() {
        // Σ_{k≥1} a^{2k+1} (u^{2k} − v^{2k}) / (2k+1)!, then times v / sinh(v a)
        let a2 = a * a;
        let (u2, v2) = (u * u, v * v);
        let mut term_a = a;
        let (mut up, mut vp) = (T::one(), T::one());
        let mut fact = T::one();
        let mut s = T::zero();
        for k in 1..30 {
            term_a = term_a * a2;
            up = up * u2;
            vp = vp * v2;
            fact = fact * c::<T>(((2 * k) * (2 * k + 1)) as f64);
            let term = term_a * (up - vp) / fact;
            s = s + term;
            if term.abs() <= T::epsilon() * s.abs() {
                break;
            }
        }
        v * s / va.sinh()
    } else if va < c(30.0) {
        v * sinhc(u, a) / va.sinh() - T::one()
    } else {
        // sinh(|u| a)/|u| = e^{|u| a} (1 − e^{−2|u| a})/(2|u|)
        let g = if u == T::zero() {
            a
        } else {
            -(-c::<T>(2.0) * u * a).exp_m1() / (c::<T>(2.0) * u)
        };
        let r = ((u - v) * a).exp() * c::<T>(2.0) * g / (T::one() - (-c::<T>(2.0) * va).exp());
        v * r - T::one()
    }
}

fn f_fisher_q<T: Scalar>(t: T, q: T) -> T {
    if t == T::one() {
        return c::<T>(3.0) / (q * q);
    }
    let a = -t.ln() * c(0.5);
    let one_minus_t = -(-c::<T>(2.0) * a).exp_m1();
    let denom = (T::one() + t) * q * v_ratio_minus_one(q - T::one(), q + T::one(), a);
    -(one_minus_t * one_minus_t) / denom
}
