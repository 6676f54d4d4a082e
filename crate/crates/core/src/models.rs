//! Parameterized density-matrix and Husimi families.
//!
//! Spherical coordinates follow `x = r cos θ1, y = r sin θ1 cos θ2,
//! z = r sin θ1 sin θ2`. The Husimi function is `H = tr(ρ (I + u·σ)/2) =
//! (1 + r cos γ)/2` with measure `dμ = dΩ/(2π)`, so `∫ H dμ = 1` and the
//! integral over the azimuth reduces `∫ f dμ` to `∫_{-1}^{1} f(c) dc`.

use num_complex::Complex;

use crate::error::{domain, Error, Result};
use crate::linalg::{matrix_power, HermitianMatrix};
use crate::scalar::{c, Scalar};
use crate::special;

/// Default lower bound on the escort parameter.
pub const DEFAULT_Q_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint<T: Scalar> {
    pub r: T,
    pub theta1: T,
    pub theta2: T,
}

impl<T: Scalar> BlochPoint<T> {
    pub fn new(r: T, theta1: T, theta2: T) -> Result<Self> {
        if !(r >= T::zero() && r <= T::one()) {
            return domain(format!("Bloch radius {r} outside [0, 1]"));
        }
        if !(theta1 >= T::zero() && theta1 <= T::PI()) {
            return domain(format!("polar angle {theta1} outside [0, π]"));
        }
        if !theta2.is_finite() {
            return domain("azimuth is not finite");
        }
        Ok(Self { r, theta1, theta2 })
    }

    pub fn cartesian(&self) -> [T; 3] {
        let (s1, c1) = self.theta1.sin_cos();
        let (s2, c2) = self.theta2.sin_cos();
        [self.r * c1, self.r * s1 * c2, self.r * s1 * s2]
    }

    /// Unit direction of the Bloch vector.
    pub fn direction(&self) -> [T; 3] {
        let (s1, c1) = self.theta1.sin_cos();
        let (s2, c2) = self.theta2.sin_cos();
        [c1, s1 * c2, s1 * s2]
    }

    /// `W = (1 − r)/(1 + r)`; `None` at the pure-state boundary where it is zero
    /// and `log W` is undefined.
    pub fn w_ratio(&self) -> Option<T> {
        if self.r >= T::one() {
            None
        } else {
            Some(special::w_ratio(self.r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscortPoint<T: Scalar> {
    pub base: BlochPoint<T>,
    pub q: T,
}

impl<T: Scalar> EscortPoint<T> {
    pub fn new(q: T, base: BlochPoint<T>) -> Result<Self> {
        Self::with_floor(q, base, c(DEFAULT_Q_FLOOR))
    }

    pub fn with_floor(q: T, base: BlochPoint<T>, floor: T) -> Result<Self> {
        if !(q >= floor) || !q.is_finite() {
            return domain(format!("escort parameter {q} below floor {floor}"));
        }
        Ok(Self { base, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinOneFamilyPoint<T: Scalar> {
    pub v: T,
    pub r: T,
    pub theta1: T,
    pub theta2: T,
}

impl<T: Scalar> SpinOneFamilyPoint<T> {
    pub fn new(v: T, r: T, theta1: T, theta2: T) -> Result<Self> {
        if !(v >= T::zero() && v <= T::one()) {
            return domain(format!("v = {v} outside [0, 1]"));
        }
        if !(r >= T::zero() && r <= v) {
            return domain(format!("r = {r} must satisfy 0 ≤ r ≤ v = {v}"));
        }
        BlochPoint::new(T::zero(), theta1, theta2)?;
        Ok(Self { v, r, theta1, theta2 })
    }

    fn cartesian(&self) -> [T; 3] {
        BlochPoint { r: self.r, theta1: self.theta1, theta2: self.theta2 }.cartesian()
    }
}

/// Parameters of the two-qubit Abe-Rajagopal family at fixed `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbeRajPoint<T: Scalar> {
    pub b_q: T,
    pub sigma_q2: T,
}

impl<T: Scalar> AbeRajPoint<T> {
    /// Requires every logarithm in the metric to have a positive argument.
    pub fn new(b_q: T, sigma_q2: T) -> Result<Self> {
        let k = c::<T>(2.0 * std::f64::consts::SQRT_2) * b_q.abs();
        let ok = sigma_q2 < c(8.0)
            && sigma_q2 * sigma_q2 > c::<T>(8.0) * b_q * b_q
            && sigma_q2 > k;
        if !ok {
            return domain(format!(
                "(b_q, σ_q²) = ({b_q}, {sigma_q2}) outside the metric domain"
            ));
        }
        Ok(Self { b_q, sigma_q2 })
    }
}

fn cplx<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// `(1/2)[[1+z, x−iy], [x+iy, 1−z]]`.
pub fn bloch_rho<T: Scalar>(p: &BlochPoint<T>) -> HermitianMatrix<T> {
    let [x, y, z] = p.cartesian();
    let h = c::<T>(0.5);
    let zero = T::zero();
    HermitianMatrix::from_rows(&[
        vec![cplx(h * (T::one() + z), zero), cplx(h * x, -h * y)],
        vec![cplx(h * x, h * y), cplx(h * (T::one() - z), zero)],
    ])
    .expect("Bloch matrix is Hermitian by construction")
}

/// Escort density matrix `(2ρ)^q / ((1−r)^q + (1+r)^q)`.
pub fn escort_rho<T: Scalar>(p: &EscortPoint<T>) -> Result<HermitianMatrix<T>> {
    let r = p.base.r;
    if r >= T::one() && p.q < T::one() {
        return Err(Error::SingularState(format!(
            "pure state with q = {} < 1",
            p.q
        )));
    }
    let twice = bloch_rho(&p.base).scale(c(2.0));
    let norm = (T::one() - r).powf(p.q) + (T::one() + r).powf(p.q);
    Ok(matrix_power(&twice, p.q)?.scale(T::one() / norm))
}

/// 3×3 family with the extra parameter `v` in the central entry.
pub fn spin1_rho<T: Scalar>(p: &SpinOneFamilyPoint<T>) -> Result<HermitianMatrix<T>> {
    if p.r > p.v {
        return domain(format!("r = {} exceeds v = {}", p.r, p.v));
    }
    let [x, y, z] = p.cartesian();
    let h = c::<T>(0.5);
    let zero = T::zero();
    let o = cplx(zero, zero);
    HermitianMatrix::from_rows(&[
        vec![cplx(h * (p.v + z), zero), o, cplx(h * x, -h * y)],
        vec![o, cplx(T::one() - p.v, zero), o],
        vec![cplx(h * x, h * y), o, cplx(h * (p.v - z), zero)],
    ])
}

/// Escort version `ρ^q / tr ρ^q` of the 3×3 family.
pub fn spin1_escort_rho<T: Scalar>(p: &SpinOneFamilyPoint<T>, q: T) -> Result<HermitianMatrix<T>> {
    let powered = matrix_power(&spin1_rho(p)?, q)?;
    let tr = powered.trace();
    Ok(powered.scale(T::one() / tr))
}

/// Husimi value `(1 + r c)/2` for direction cosine `c` relative to the Bloch vector.
pub fn husimi_value<T: Scalar>(p: &BlochPoint<T>, cos_gamma: T) -> Result<T> {
    if !(cos_gamma >= -T::one() && cos_gamma <= T::one()) {
        return domain(format!("direction cosine {cos_gamma} outside [−1, 1]"));
    }
    Ok((T::one() + p.r * cos_gamma) * c(0.5))
}

/// `Z(q, r) = ∫_{-1}^{1} ((1 + r c)/2)^q dc
///          = 2^{-q} ((1+r)^{q+1} − (1−r)^{q+1}) / (r (q+1))`.
pub fn escort_husimi_normalizer<T: Scalar>(q: T, r: T) -> T {
    let two = c::<T>(2.0);
    let qp1 = q + T::one();
    if r == T::zero() {
        return two.powf(T::one() - q);
    }
    // (1+r)^{q+1} − (1−r)^{q+1} = 2 e^{(a+b)/2} sinh((a−b)/2)
    let a = qp1 * r.ln_1p();
    let b = qp1 * (-r).ln_1p();
    let diff = if r >= T::one() {
        two.powf(qp1)
    } else {
        two * ((a + b) * c(0.5)).exp() * ((a - b) * c(0.5)).sinh()
    };
    two.powf(-q) * diff / (r * qp1)
}

/// Escort Husimi value `H^q / Z(q, r)`, normalized under `dμ = dΩ/(2π)`.
pub fn escort_husimi_value<T: Scalar>(p: &EscortPoint<T>, cos_gamma: T) -> Result<T> {
    let h = husimi_value(&p.base, cos_gamma)?;
    if p.q == T::one() {
        return Ok(h);
    }
    Ok(h.powf(p.q) / escort_husimi_normalizer(p.q, p.base.r))
}

/// Ratio of the printed escort-Husimi prefactor `2(r + q r)/((1+r)^{1+q} − (1−r)^{1+q})`
/// to the self-normalizing constant `1/Z(q, r)`; equals `2^{1−q}`.
pub fn printed_prefactor_ratio<T: Scalar>(q: T, r: T) -> T {
    let printed = c::<T>(2.0) * (r + q * r)
        / ((T::one() + r).powf(T::one() + q) - (T::one() - r).powf(T::one() + q));
    printed * escort_husimi_normalizer(q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, frobenius_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn bp(r: f64, t1: f64, t2: f64) -> BlochPoint<f64> {
        BlochPoint::new(r, t1, t2).unwrap()
    }

    #[test]
    fn bloch_examples() {
        let m = bloch_rho(&bp(0.0, 0.3, 1.0));
        let half = HermitianMatrix::<f64>::identity(2).unwrap().scale(0.5);
        assert!(frobenius_distance(&m, &half).unwrap() < 1e-15);

        let pure = bloch_rho(&bp(1.0, PI / 2.0, PI / 2.0));
        let want = HermitianMatrix::diag(&[1.0, 0.0]).unwrap();
        assert!(frobenius_distance(&pure, &want).unwrap() < 1e-15);

        // x = r cos θ1: the x-axis is θ1 = 0
        let m = bloch_rho(&bp(0.5, 0.0, 0.0));
        assert!((m.get(0, 1).re - 0.25).abs() < 1e-15 && m.get(0, 1).im.abs() < 1e-15);
        assert!((m.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((m.get(1, 1).re - 0.5).abs() < 1e-15);
        // θ1 = π/2, θ2 = 0 lies on the y-axis
        let m = bloch_rho(&bp(0.5, PI / 2.0, 0.0));
        assert!(m.get(0, 1).re.abs() < 1e-15 && (m.get(0, 1).im + 0.25).abs() < 1e-15);
    }

    #[test]
    fn cartesian_radius_invariant_and_validation() {
        let p = bp(0.7, 1.1, 4.0);
        let [x, y, z] = p.cartesian();
        assert!((x * x + y * y + z * z - 0.49).abs() < 1e-12);
        assert!(BlochPoint::new(1.1, 0.0, 0.0).is_err());
        assert!(BlochPoint::new(0.5, 4.0, 0.0).is_err());
        assert_eq!(bp(1.0, 0.0, 0.0).w_ratio(), None);
        assert!((bp(0.5, 0.0, 0.0).w_ratio().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_eigenvalues_are_one_plus_minus_r_over_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = bp(rng.gen_range(0.0..1.0), rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
            let es = eigh(&bloch_rho(&p));
            let ev = es.eigenvalues();
            assert!((ev[0] - (1.0 - p.r) / 2.0).abs() < 1e-13);
            assert!((ev[1] - (1.0 + p.r) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn escort_examples() {
        let p = bp(0.37, 0.8, 2.2);
        let e = escort_rho(&EscortPoint::new(1.0, p).unwrap()).unwrap();
        assert!(frobenius_distance(&e, &bloch_rho(&p)).unwrap() < 1e-12);

        let e = escort_rho(&EscortPoint::new(3.3, bp(0.0, 1.0, 1.0)).unwrap()).unwrap();
        let half = HermitianMatrix::<f64>::identity(2).unwrap().scale(0.5);
        assert!(frobenius_distance(&e, &half).unwrap() < 1e-14);

        // z axis: θ1 = θ2 = π/2
        let e = escort_rho(&EscortPoint::new(2.0, bp(0.6, PI / 2.0, PI / 2.0)).unwrap()).unwrap();
        let want = HermitianMatrix::diag(&[16.0 / 17.0, 1.0 / 17.0]).unwrap();
        assert!(frobenius_distance(&e, &want).unwrap() < 1e-14);

        assert!(EscortPoint::new(0.4, p).is_err());
        assert!(EscortPoint::with_floor(0.4, p, 0.25).is_ok());
        let pure = EscortPoint::with_floor(0.75, bp(1.0, 0.0, 0.0), 0.5).unwrap();
        assert!(matches!(escort_rho(&pure), Err(Error::SingularState(_))));
    }

    #[test]
    fn escort_power_half_eigenvalues() {
        let e = escort_rho(&EscortPoint::new(0.5, bp(0.6, 0.4, 0.9)).unwrap()).unwrap();
        let ev = eigh(&e).eigenvalues().to_vec();
        let norm = 0.4f64.sqrt() + 1.6f64.sqrt();
        assert!((ev[0] - 0.4f64.sqrt() / norm).abs() < 1e-14);
        assert!((ev[1] - 1.6f64.sqrt() / norm).abs() < 1e-14);
        // ratio of the matrix_power eigenvalues {√0.2, √0.8}
        assert!((ev[1] / ev[0] - (0.8f64 / 0.2).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn escort_continuous_in_q() {
        let p = bp(0.8, 1.2, 0.3);
        let base = bloch_rho(&p);
        for q in [1.0 - 1e-7, 1.0 + 1e-7] {
            let e = escort_rho(&EscortPoint::new(q, p).unwrap()).unwrap();
            assert!(frobenius_distance(&e, &base).unwrap() < 1e-5);
        }
    }

    #[test]
    fn spin1_examples() {
        let m = spin1_rho(&SpinOneFamilyPoint::new(2.0 / 3.0, 0.0, 0.5, 0.5).unwrap()).unwrap();
        let want = HermitianMatrix::diag(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(frobenius_distance(&m, &want).unwrap() < 1e-15);

        let p = SpinOneFamilyPoint::new(1.0, 0.4, 0.7, 1.9).unwrap();
        let m = spin1_rho(&p).unwrap();
        assert_eq!(m.get(1, 1).re, 0.0);
        let b = bloch_rho(&bp(0.4, 0.7, 1.9));
        for (i, bi) in [(0, 0), (2, 1)] {
            for (j, bj) in [(0, 0), (2, 1)] {
                assert!((m.get(i, j) - b.get(bi, bj)).norm() < 1e-15);
            }
        }
        assert!(SpinOneFamilyPoint::new(0.5, 0.6, 0.0, 0.0).is_err());
    }

    #[test]
    fn spin1_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let v: f64 = rng.gen_range(0.0..1.0);
            let r = rng.gen_range(0.0..v);
            let p = SpinOneFamilyPoint::new(v, r, rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI)).unwrap();
            let ev = eigh(&spin1_rho(&p).unwrap()).eigenvalues().to_vec();
            let mut want = vec![(v - r) / 2.0, 1.0 - v, (v + r) / 2.0];
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(&want) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn families_have_unit_trace_and_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let r: f64 = rng.gen_range(0.0..1.0);
            let p = bp(r, rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
            let q = rng.gen_range(0.5..6.0);
            let v = rng.gen_range(r..=1.0);
            let mats = [
                bloch_rho(&p),
                escort_rho(&EscortPoint::new(q, BlochPoint { r: r.min(0.999), ..p }).unwrap()).unwrap(),
                spin1_rho(&SpinOneFamilyPoint::new(v, r, p.theta1, p.theta2).unwrap()).unwrap(),
            ];
            for m in mats {
                assert!((m.trace() - 1.0).abs() < 1e-12);
                assert!(eigh(&m).eigenvalues()[0] >= -1e-12);
            }
        }
    }

    fn gl_integral(f: impl Fn(f64) -> f64) -> f64 {
        // composite Simpson on [-1, 1]; integrands here are smooth
        let n = 2000;
        let h = 2.0 / n as f64;
        (0..=n)
            .map(|i| {
                let x = -1.0 + i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(x)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    #[test]
    fn husimi_examples() {
        for cg in [-1.0, 0.0, 0.4] {
            assert_eq!(husimi_value(&bp(0.0, 0.0, 0.0), cg).unwrap(), 0.5);
        }
        assert_eq!(husimi_value(&bp(1.0, 0.0, 0.0), -1.0).unwrap(), 0.0);
        assert!(husimi_value(&bp(0.5, 0.0, 0.0), 1.5).is_err());
        for r in [0.1, 0.5, 0.9] {
            let p = bp(r, 0.0, 0.0);
            let mass = gl_integral(|cg| husimi_value(&p, cg).unwrap());
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn escort_husimi_self_normalizes() {
        for q in [0.5, 1.0, 2.0, 5.0] {
            for r in [0.1, 0.5, 0.9] {
                let p = EscortPoint::new(q, bp(r, 0.0, 0.0)).unwrap();
                let mass = gl_integral(|cg| escort_husimi_value(&p, cg).unwrap());
                assert!((mass - 1.0).abs() < 1e-8, "q={q} r={r}: {mass}");
            }
            let p = EscortPoint::new(q, bp(0.0, 0.0, 0.0)).unwrap();
            assert!((escort_husimi_value(&p, 0.3).unwrap() - 0.5).abs() < 1e-15);
        }
        let p = EscortPoint::new(1.0, bp(0.6, 0.0, 0.0)).unwrap();
        assert!((escort_husimi_value(&p, 0.2).unwrap() - husimi_value(&p.base, 0.2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn printed_prefactor_differs_by_power_of_two() {
        for q in [0.5, 1.0, 3.0] {
            for r in [0.2, 0.7] {
                let ratio = printed_prefactor_ratio(q, r);
                assert!((ratio - 2f64.powf(1.0 - q)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aberaj_domain() {
        assert!(AbeRajPoint::new(0.1, 4.0).is_ok());
        assert!(AbeRajPoint::new(0.1, 9.0).is_err());
        assert!(AbeRajPoint::new(1.5, 4.0).is_err());
    }
}
