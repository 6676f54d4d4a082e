//! Numeric Bures metric from the eigenbasis sum
//! `g_ab = Σ_ij ½ Re(⟨i|∂_a ρ|j⟩ ⟨j|∂_b ρ|i⟩) / (λ_i + λ_j)`.

use super::tensor::{Coord, MetricTensor};
use crate::error::{domain, Error, Result};
use crate::linalg::{eigh, matrix_power, Block, HermitianMatrix};
use crate::models::{
    bloch_rho, escort_rho, spin1_escort_rho, spin1_rho, BlochPoint, EscortPoint,
    SpinOneFamilyPoint,
};
use crate::scalar::{c, Scalar};

/// Relative finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Step for [`hubner_metric_richardson`]: the extrapolated truncation error is
/// `O(h⁴)`, so a larger step trades nothing for much less roundoff when a
/// metric coefficient is small next to the entries of `ρ`.
pub const RICHARDSON_STEP: f64 = 1e-3;

/// Eigenvalues at or below this make the eigenbasis sum unusable.
pub const MIN_EIGENVALUE: f64 = 1e-10;

/// A smooth map from coordinates to density matrices.
pub trait DensityFamily<T: Scalar>: Sync {
    fn labels(&self) -> Vec<Coord>;
    fn rho(&self, x: &[T]) -> Result<HermitianMatrix<T>>;
}

/// Bloch ball over `(r, θ1, θ2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlochFamily;

/// Escort Bloch ball over `(q, r, θ1, θ2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EscortFamily;

/// 3×3 family over `(v, r, θ1, θ2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinOneFamily;

/// Escort 3×3 family over `(q, v, r, θ1, θ2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinOneEscortFamily;

fn arity<T>(x: &[T], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch(n, x.len()));
    }
    Ok(())
}

// Finite differences may step θ1 slightly outside [0, π]; the matrices are
// analytic there, so the points are built without the angular range check.
fn bloch_unchecked<T: Scalar>(r: T, theta1: T, theta2: T) -> Result<BlochPoint<T>> {
    if !(r >= T::zero() && r <= T::one()) {
        return domain(format!("Bloch radius {r} outside [0, 1]"));
    }
    Ok(BlochPoint { r, theta1, theta2 })
}

impl<T: Scalar> DensityFamily<T> for BlochFamily {
    fn labels(&self) -> Vec<Coord> {
        vec![Coord::R, Coord::Theta1, Coord::Theta2]
    }
    fn rho(&self, x: &[T]) -> Result<HermitianMatrix<T>> {
        arity(x, 3)?;
        Ok(bloch_rho(&bloch_unchecked(x[0], x[1], x[2])?))
    }
}

impl<T: Scalar> DensityFamily<T> for EscortFamily {
    fn labels(&self) -> Vec<Coord> {
        vec![Coord::Q, Coord::R, Coord::Theta1, Coord::Theta2]
    }
    fn rho(&self, x: &[T]) -> Result<HermitianMatrix<T>> {
        arity(x, 4)?;
        let base = bloch_unchecked(x[1], x[2], x[3])?;
        escort_rho(&EscortPoint::with_floor(x[0], base, T::min_positive_value())?)
    }
}

fn spin_point<T: Scalar>(v: T, r: T, theta1: T, theta2: T) -> Result<SpinOneFamilyPoint<T>> {
    if !(r >= T::zero() && r <= v && v <= T::one()) {
        return domain(format!("need 0 ≤ r ≤ v ≤ 1, got r = {r}, v = {v}"));
    }
    Ok(SpinOneFamilyPoint { v, r, theta1, theta2 })
}

impl<T: Scalar> DensityFamily<T> for SpinOneFamily {
    fn labels(&self) -> Vec<Coord> {
        vec![Coord::V, Coord::R, Coord::Theta1, Coord::Theta2]
    }
    fn rho(&self, x: &[T]) -> Result<HermitianMatrix<T>> {
        arity(x, 4)?;
        spin1_rho(&spin_point(x[0], x[1], x[2], x[3])?)
    }
}

impl<T: Scalar> DensityFamily<T> for SpinOneEscortFamily {
    fn labels(&self) -> Vec<Coord> {
        vec![Coord::Q, Coord::V, Coord::R, Coord::Theta1, Coord::Theta2]
    }
    fn rho(&self, x: &[T]) -> Result<HermitianMatrix<T>> {
        arity(x, 5)?;
        if !(x[0] > T::zero()) {
            return domain(format!("escort parameter {} must be positive", x[0]));
        }
        spin1_escort_rho(&spin_point(x[1], x[2], x[3], x[4])?, x[0])
    }
}

fn central_difference<T: Scalar, F: DensityFamily<T> + ?Sized>(
    family: &F,
    x: &[T],
    a: usize,
    h: T,
) -> Result<HermitianMatrix<T>> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[a] = x[a] + h;
    xm[a] = x[a] - h;
    let d = family.rho(&xp)?.sub(&family.rho(&xm)?)?;
    Ok(d.scale(T::one() / (h + h)))
}

fn assemble<T: Scalar>(
    labels: Vec<Coord>,
    values: &[T],
    dim: usize,
    derivs: &[Block<T>],
) -> MetricTensor<T> {
    let n = derivs.len();
    let half = c::<T>(0.5);
    let mut g = vec![T::zero(); n * n];
    for a in 0..n {
        for b in a..n {
            let mut s = T::zero();
            for i in 0..dim {
                for j in 0..dim {
                    let num = (derivs[a][i][j] * derivs[b][i][j].conj()).re;
                    s = s + half * num / (values[i] + values[j]);
                }
            }
            g[a * n + b] = s;
            g[b * n + a] = s;
        }
    }
    MetricTensor::new(labels, g).expect("eigenbasis sum is symmetric by construction")
}

fn metric_with<T: Scalar, F: DensityFamily<T> + ?Sized>(
    family: &F,
    params: &[T],
    step: T,
    richardson: bool,
) -> Result<MetricTensor<T>> {
    let labels = family.labels();
    arity(params, labels.len())?;
    if !(step > T::zero()) {
        return domain(format!("finite-difference step {step} must be positive"));
    }
    let rho = family.rho(params)?;
    let es = eigh(&rho);
    let values = es.eigenvalues();
    if let Some(&lmin) = values.first() {
        if lmin <= c(MIN_EIGENVALUE) {
            return Err(Error::SingularState(format!(
                "eigenvalue {lmin} ≤ {MIN_EIGENVALUE}; the eigenbasis sum divides by λ_i + λ_j"
            )));
        }
    }
    let mut derivs = Vec::with_capacity(labels.len());
    for a in 0..labels.len() {
        let h = step * params[a].abs().max(T::one());
        let d = if richardson {
            let coarse = central_difference(family, params, a, h)?;
            let fine = central_difference(family, params, a, h * c(0.5))?;
            fine.scale(c(4.0 / 3.0)).sub(&coarse.scale(c(1.0 / 3.0)))?
        } else {
            central_difference(family, params, a, h)?
        };
        derivs.push(d.in_basis(&es));
    }
    Ok(assemble(labels, values, rho.dim(), &derivs))
}

/// Bures metric by central differences of `ρ` with relative step `step`.
pub fn hubner_metric<T: Scalar, F: DensityFamily<T> + ?Sized>(
    family: &F,
    params: &[T],
    step: T,
) -> Result<MetricTensor<T>> {
    metric_with(family, params, step, false)
}

/// As [`hubner_metric`] with one Richardson extrapolation of each derivative.
pub fn hubner_metric_richardson<T: Scalar, F: DensityFamily<T> + ?Sized>(
    family: &F,
    params: &[T],
    step: T,
) -> Result<MetricTensor<T>> {
    metric_with(family, params, step, true)
}

fn check_state<T: Scalar>(rho: &HermitianMatrix<T>) -> Result<()> {
    let tol = c::<T>(1e-10);
    if (rho.trace() - T::one()).abs() > tol {
        return domain(format!("trace {} is not 1", rho.trace()));
    }
    if let Some(&lmin) = eigh(rho).eigenvalues().first() {
        if lmin < -tol {
            return domain(format!("negative eigenvalue {lmin}"));
        }
    }
    Ok(())
}

/// Bures distance `d² = 2 − 2 tr √(√ρ1 ρ2 √ρ1)`.
pub fn bures_distance<T: Scalar>(rho1: &HermitianMatrix<T>, rho2: &HermitianMatrix<T>) -> Result<T> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    check_state(rho1)?;
    check_state(rho2)?;
    let s1 = matrix_power(&clip(rho1), c(0.5))?;
    let inner = clip(&s1.sandwich(rho2)?);
    let fid = matrix_power(&inner, c(0.5))?.trace();
    Ok((c::<T>(2.0) - c::<T>(2.0) * fid).max(T::zero()).sqrt())
}

/// Clamps tiny negative eigenvalues (round-off) to zero.
fn clip<T: Scalar>(m: &HermitianMatrix<T>) -> HermitianMatrix<T> {
    eigh(m).reconstruct_with(|l| l.max(T::zero()))
}
