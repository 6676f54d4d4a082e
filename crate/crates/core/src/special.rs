//! Cancellation-free radial functions.
//!
//! Most closed forms in the Husimi/Fisher catalog are differences of
//! quantities that agree to leading order as `r → 0`, e.g.
//! `2r + (1 − r²) log W`. Below [`SERIES_CUTOFF`] they are evaluated from
//! their power series in `s = r²`; above it from the direct expression.
//! All series are in `atanh r = Σ r^{2k+1}/(2k+1)`, using `log W = −2 atanh r`.

use crate::scalar::{c, Scalar};

/// Radius below which the series branches are used.
pub const SERIES_CUTOFF: f64 = 0.3;

const TERMS: usize = 40;

/// Eigenvalue ratio `W = (1 − r)/(1 + r)`.
#[inline]
pub fn w_ratio<T: Scalar>(r: T) -> T {
    (T::one() - r) / (T::one() + r)
}

/// `log W`, computed as `−2 atanh r`.
#[inline]
pub fn log_w<T: Scalar>(r: T) -> T {
    -c::<T>(2.0) * r.atanh()
}

/// `atanh r` given `r` and its complement `s = 1 − r`.
///
/// Near pure states `r` itself cannot resolve `1 − r`; callers that carry
/// `s` separately (e.g. integrating in `s`) keep full relative accuracy.
#[inline]
pub fn atanh_c<T: Scalar>(r: T, s: T) -> T {
    if r < c(0.5) {
        r.atanh()
    } else {
        ((T::one() + r) / s).ln() * c(0.5)
    }
}

/// `log W` from `r` and `s = 1 − r`.
#[inline]
pub fn log_w_c<T: Scalar>(r: T, s: T) -> T {
    -c::<T>(2.0) * atanh_c(r, s)
}

fn horner<T: Scalar>(coef: &[f64], s: T) -> T {
    coef.iter().rev().fold(T::zero(), |acc, &a| acc * s + c(a))
}

/// Coefficients of `(atanh r − r)/r³ = Σ_j s^j/(2j+3)`.
fn radial_series() -> [f64; TERMS] {
    std::array::from_fn(|j| 1.0 / (2 * j + 3) as f64)
}

/// Coefficients of `Q(s) = Σ_j s^j/((2j+1)(2j+3))`, so `A(r) = s·Q(s)`.
fn tangential_series() -> [f64; TERMS] {
    std::array::from_fn(|j| 1.0 / (((2 * j + 1) * (2 * j + 3)) as f64))
}

/// Coefficients of `P(s)` with `r + (1 − r²) atanh r = r·P(s)`.
fn sum_series() -> [f64; TERMS] {
    std::array::from_fn(|j| {
        if j == 0 {
            2.0
        } else {
            -2.0 / (((2 * j - 1) * (2 * j + 1)) as f64)
        }
    })
}

/// Coefficients of `P·G/2 − Q`; the constant term vanishes identically.
fn block_det_series() -> [f64; TERMS] {
    let p = sum_series();
    let g = radial_series();
    let q = tangential_series();
    std::array::from_fn(|k| {
        let conv: f64 = (0..=k).map(|i| p[i] * g[k - i]).sum();
        if k == 0 {
            0.0
        } else {
            0.5 * conv - q[k]
        }
    })
}

/// Radial Husimi Fisher coefficient `(−2r − log W)/(2r³) = (atanh r − r)/r³`.
pub fn husimi_radial<T: Scalar>(r: T) -> T {
    husimi_radial_c(r, T::one() - r)
}

/// [`husimi_radial`] with the complement `s = 1 − r` supplied.
pub fn husimi_radial_c<T: Scalar>(r: T, s: T) -> T {
    if r.to_f64().unwrap_or(0.0) < SERIES_CUTOFF {
        horner(&radial_series(), r * r)
    } else {
        (atanh_c(r, s) - r) / (r * r * r)
    }
}

/// Husimi Fisher coefficient of `dθ1²`: `(2r + (1 − r²) log W)/(4r)`.
///
/// Equals `r²·((1+r) f_F(W))⁻¹`.
pub fn husimi_tangential<T: Scalar>(r: T) -> T {
    husimi_tangential_c(r, T::one() - r)
}

/// [`husimi_tangential`] with the complement `s = 1 − r` supplied.
pub fn husimi_tangential_c<T: Scalar>(r: T, s: T) -> T {
    if r.to_f64().unwrap_or(0.0) < SERIES_CUTOFF {
        let r2 = r * r;
        r2 * horner(&tangential_series(), r2)
    } else {
        (r - s * (T::one() + r) * atanh_c(r, s)) / (c::<T>(2.0) * r)
    }
}

/// `r + (1 − r²) atanh r`.
fn husimi_sum<T: Scalar>(r: T, s: T) -> T {
    if r.to_f64().unwrap_or(0.0) < SERIES_CUTOFF {
        r * horner(&sum_series(), r * r)
    } else {
        r + s * (T::one() + r) * atanh_c(r, s)
    }
}

/// `dq²` coefficient of the q-extended Husimi metric at `q = 1`:
/// `1/4 − (r² − 1)² log²W/(16 r²)`.
pub fn husimi_q1_qq<T: Scalar>(r: T) -> T {
    let s = T::one() - r;
    husimi_tangential_c(r, s) * husimi_sum(r, s) / (c::<T>(2.0) * r)
}

/// Symmetric `g_qr` entry of the q-extended Husimi metric at `q = 1`,
/// half the printed `dq dr` coefficient `(2r − (r² − 1) log W)/(2r²)`.
pub fn husimi_q1_qr<T: Scalar>(r: T) -> T {
    husimi_tangential(r) / r
}

/// Determinant of the `(q, r)` block of the q-extended Husimi metric at `q = 1`.
///
/// Behaves as `r⁴/135` near the origin where the direct product difference
/// loses all significant digits.
pub fn husimi_q1_block_det<T: Scalar>(r: T) -> T {
    husimi_q1_block_det_c(r, T::one() - r)
}

/// [`husimi_q1_block_det`] with the complement `s = 1 − r` supplied.
pub fn husimi_q1_block_det_c<T: Scalar>(r: T, s: T) -> T {
    if r.to_f64().unwrap_or(0.0) < SERIES_CUTOFF {
        let r2 = r * r;
        r2 * horner(&tangential_series(), r2) * horner(&block_det_series(), r2)
    } else {
        let a = husimi_tangential_c(r, s);
        let qq = a * husimi_sum(r, s) / (c::<T>(2.0) * r);
        let qr = a / r;
        qq * husimi_radial_c(r, s) - qr * qr
    }
}

/// Length of the escort Bloch vector, `(1 − W^q)/(1 + W^q) = tanh(q atanh r)`.
#[inline]
pub fn escort_length<T: Scalar>(q: T, r: T) -> T {
    (q * r.atanh()).tanh()
}

/// `a(q, r) = (1 − W^q)/(r (1 + W^q))`, with the limit `a(q, 0) = q`.
pub fn escort_scale<T: Scalar>(q: T, r: T) -> T {
    if r == T::zero() {
        q
    } else {
        escort_length(q, r) / r
    }
}
