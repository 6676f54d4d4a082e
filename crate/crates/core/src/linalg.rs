//! Small dense complex Hermitian matrices (dimension 2 to 4).
//!
//! Dimension 2 uses the closed quadratic eigen-solution; dimensions 3 and 4
//! use cyclic complex Jacobi sweeps. Storage is a fixed 4×4 array so the
//! types are `Copy` and allocation-free inside quadrature loops.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

pub const MAX_DIM: usize = 4;

/// Tolerance on `|m_ij − conj(m_ji)|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below this are treated as zero by [`matrix_power`].
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

pub(crate) type Block<T> = [[Complex<T>; MAX_DIM]; MAX_DIM];

fn zero_block<T: Scalar>() -> Block<T> {
    [[Complex::new(T::zero(), T::zero()); MAX_DIM]; MAX_DIM]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMatrix<T: Scalar> {
    dim: usize,
    entries: Block<T>,
}

impl<T: Scalar> HermitianMatrix<T> {
    /// Builds a matrix from row-major entries, checking Hermiticity.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let dim = rows.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut entries = zero_block();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(dim, row.len()));
            }
            entries[i][..dim].copy_from_slice(row);
        }
        let m = Self { dim, entries };
        m.check_hermitian()?;
        Ok(m.hermitized())
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(x, T::zero())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[T]) -> Result<Self> {
        let dim = values.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut entries = zero_block();
        for (i, &v) in values.iter().enumerate() {
            entries[i][i] = Complex::new(v, T::zero());
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diag(&vec![T::one(); dim])
    }

    /// Skips validation; callers guarantee Hermiticity up to rounding.
    pub(crate) fn from_block_unchecked(dim: usize, entries: Block<T>) -> Self {
        Self { dim, entries }.hermitized()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i][j]
    }

    fn check_hermitian(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.entries[i][j] - self.entries[j][i].conj()).norm();
                let dev = d.to_f64().unwrap_or(f64::INFINITY);
                if !(dev <= HERMITIAN_TOL) {
                    return Err(Error::NotHermitian { i, j, deviation: dev });
                }
            }
        }
        Ok(())
    }

    /// Replaces `m` with `(m + m†)/2`.
    fn hermitized(mut self) -> Self {
        let half = c::<T>(0.5);
        for i in 0..self.dim {
            self.entries[i][i] = Complex::new(self.entries[i][i].re, T::zero());
            for j in (i + 1)..self.dim {
                let avg = (self.entries[i][j] + self.entries[j][i].conj()) * half;
                self.entries[i][j] = avg;
                self.entries[j][i] = avg.conj();
            }
        }
        self
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut().take(self.dim) {
            for e in row.iter_mut().take(self.dim) {
                *e = *e * s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] = self.entries[i][j] + other.entries[i][j];
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch(self.dim, other.dim))
        } else {
            Ok(())
        }
    }

    /// `A·B·A` for Hermitian `A`, `B`; the result is Hermitian.
    pub fn sandwich(&self, inner: &Self) -> Result<Self> {
        self.same_dim(inner)?;
        let ab = matmul(self.dim, &self.entries, &inner.entries);
        let aba = matmul(self.dim, &ab, &self.entries);
        Ok(Self::from_block_unchecked(self.dim, aba))
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.entries[i][i].re)
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                s = s + self.entries[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `V† M V` in the eigenbasis of `basis`, returned as a full block.
    pub(crate) fn in_basis(&self, basis: &EigenSystem<T>) -> Block<T> {
        let v = &basis.vectors;
        let mut vh = zero_block();
        for i in 0..self.dim {
            for j in 0..self.dim {
                vh[i][j] = v[j][i].conj();
            }
        }
        let mv = matmul(self.dim, &self.entries, v);
        matmul(self.dim, &vh, &mv)
    }
}

fn matmul<T: Scalar>(dim: usize, a: &Block<T>, b: &Block<T>) -> Block<T> {
    let mut out = zero_block();
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            for j in 0..dim {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

/// Spectral decomposition `M = V diag(λ) V†`.
///
/// Eigenvalues ascend; `vectors[i][k]` is component `i` of eigenvector `k`,
/// phased so its largest-magnitude component is real and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem<T: Scalar> {
    dim: usize,
    values: [T; MAX_DIM],
    vectors: Block<T>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.values[..self.dim]
    }

    /// Component `i` of eigenvector `k`.
    pub fn vector_component(&self, i: usize, k: usize) -> Complex<T> {
        self.vectors[i][k]
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> HermitianMatrix<T> {
        let mut out = zero_block();
        for k in 0..self.dim {
            let lam = f(self.values[k]);
            for i in 0..self.dim {
                let vik = self.vectors[i][k] * lam;
                for j in 0..self.dim {
                    out[i][j] = out[i][j] + vik * self.vectors[j][k].conj();
                }
            }
        }
        HermitianMatrix::from_block_unchecked(self.dim, out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        self.reconstruct_with(|x| x)
    }

    /// Largest deviation of `V†V` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut s = Complex::new(T::zero(), T::zero());
                for i in 0..self.dim {
                    s = s + self.vectors[i][a].conj() * self.vectors[i][b];
                }
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((s - Complex::new(target, T::zero())).norm());
            }
        }
        worst
    }

    fn finalize(mut self) -> Self {
        let n = self.dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.values[a]
                .partial_cmp(&self.values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = self.values;
        let vectors = self.vectors;
        for (dst, &src) in order.iter().enumerate() {
            self.values[dst] = values[src];
            for i in 0..n {
                self.vectors[i][dst] = vectors[i][src];
            }
        }
        for k in 0..n {
            let mut best = 0;
            for i in 1..n {
                if self.vectors[i][k].norm() > self.vectors[best][k].norm() + c::<T>(1e-14) {
                    best = i;
                }
            }
            let pivot = self.vectors[best][k];
            let mag = pivot.norm();
            let mut norm = T::zero();
            for i in 0..n {
                norm = norm + self.vectors[i][k].norm_sqr();
            }
            let norm = norm.sqrt();
            if mag > T::zero() && norm > T::zero() {
                let phase = pivot.conj() / mag;
                for i in 0..n {
                    self.vectors[i][k] = self.vectors[i][k] * phase / norm;
                }
                self.vectors[best][k] = Complex::new(self.vectors[best][k].re, T::zero());
            }
        }
        self
    }
}

/// Hermitian eigendecomposition.
pub fn eigh<T: Scalar>(m: &HermitianMatrix<T>) -> EigenSystem<T> {
    match m.dim {
        2 => eigh2(m),
        _ => jacobi(m),
    }
    .finalize()
}

fn eigh2<T: Scalar>(m: &HermitianMatrix<T>) -> EigenSystem<T> {
    let a = m.entries[0][0].re;
    let d = m.entries[1][1].re;
    let b = m.entries[0][1];
    let half = c::<T>(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let rad = diff.hypot(b.norm());
    let mut vectors = zero_block();
    let one = Complex::new(T::one(), T::zero());
    let scale = a.abs().max(d.abs()).max(b.norm()).max(T::min_positive_value());
    if rad <= scale * c::<T>(1e-15) {
        vectors[0][0] = one;
        vectors[1][1] = one;
        return EigenSystem { dim: 2, values: [mean, mean, T::zero(), T::zero()], vectors };
    }
    let lo = mean - rad;
    let hi = mean + rad;
    // Eigenvector for λ: (b, λ − a) or (λ − d, b*), whichever is larger.
    for (k, lam) in [lo, hi].into_iter().enumerate() {
        let u = (b, Complex::new(lam - a, T::zero()));
        let w = (Complex::new(lam - d, T::zero()), b.conj());
        let nu = u.0.norm_sqr() + u.1.norm_sqr();
        let nw = w.0.norm_sqr() + w.1.norm_sqr();
        let (x, y, n) = if nu >= nw { (u.0, u.1, nu) } else { (w.0, w.1, nw) };
        let n = n.sqrt();
        vectors[0][k] = x / n;
        vectors[1][k] = y / n;
    }
    EigenSystem { dim: 2, values: [lo, hi, T::zero(), T::zero()], vectors }
}

fn jacobi<T: Scalar>(m: &HermitianMatrix<T>) -> EigenSystem<T> {
    let n = m.dim;
    let mut a = m.entries;
    let mut v = zero_block();
    for (i, row) in v.iter_mut().enumerate().take(n) {
        row[i] = Complex::new(T::one(), T::zero());
    }
    let total = m.frobenius_norm().max(T::min_positive_value());
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p][q].norm_sqr();
            }
        }
        if off.sqrt() <= eps * total * c::<T>(1e-2) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= eps * eps * total {
                    continue;
                }
                // Phase `e^{-iφ}` on column q makes a_pq real positive, then a real rotation.
                let phase = apq.conj() / mag;
                let tau = (a[q][q].re - a[p][p].re) / (c::<T>(2.0) * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = t * cs;
                let upp = Complex::new(cs, T::zero());
                let upq = Complex::new(sn, T::zero());
                let uqp = phase * (-sn);
                let uqq = phase * cs;
                for row in a.iter_mut().take(n) {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = akp * upp + akq * uqp;
                    row[q] = akp * upq + akq * uqq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = upp.conj() * apk + uqp.conj() * aqk;
                    a[q][k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[p][q] = Complex::new(T::zero(), T::zero());
                a[q][p] = Complex::new(T::zero(), T::zero());
                a[p][p] = Complex::new(a[p][p].re, T::zero());
                a[q][q] = Complex::new(a[q][q].re, T::zero());
                for row in v.iter_mut().take(n) {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = vkp * upp + vkq * uqp;
                    row[q] = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    let mut values = [T::zero(); MAX_DIM];
    for (i, val) in values.iter_mut().enumerate().take(n) {
        *val = a[i][i].re;
    }
    EigenSystem { dim: n, values, vectors: v }
}

/// `M^q` for positive semidefinite `M`.
pub fn matrix_power<T: Scalar>(m: &HermitianMatrix<T>, q: T) -> Result<HermitianMatrix<T>> {
    let es = eigh(m);
    let tol = c::<T>(ZERO_EIGENVALUE_TOL);
    for &lam in es.eigenvalues() {
        if lam < -tol {
            return Err(Error::Domain(format!(
                "matrix_power: negative eigenvalue {lam}"
            )));
        }
        if lam.abs() <= tol && q <= T::zero() {
            return Err(Error::Domain(format!(
                "matrix_power: exponent {q} ≤ 0 with zero eigenvalue"
            )));
        }
    }
    if q == T::one() {
        return Ok(*m);
    }
    Ok(es.reconstruct_with(|lam| {
        let lam = lam.max(T::zero());
        if lam == T::zero() {
            T::zero()
        } else {
            lam.powf(q)
        }
    }))
}

pub fn trace<T: Scalar>(m: &HermitianMatrix<T>) -> T {
    m.trace()
}

pub fn frobenius_distance<T: Scalar>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<T> {
    Ok(a.sub(b)?.frobenius_norm())
}

/// Eigenvalues of a small real symmetric matrix (row-major, `n × n`), ascending.
pub fn symmetric_eigenvalues<T: Scalar>(n: usize, g: &[T]) -> Vec<T> {
    let mut a = g.to_vec();
    let total = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let eps = T::epsilon();
    for _ in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= eps * total * c::<T>(1e-2) || total == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= eps * eps * total {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (c::<T>(2.0) * apq);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut vals: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    vals
}
