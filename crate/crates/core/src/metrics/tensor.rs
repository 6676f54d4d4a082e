use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::scalar::{c, Scalar};

/// A metric is treated as null when `|det g| < DEGENERACY_TOL · Π g_ii`.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    Q,
    R,
    Theta1,
    Theta2,
    V,
    Bq,
    SigmaQ2,
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Coord::Q => "q",
            Coord::R => "r",
            Coord::Theta1 => "theta1",
            Coord::Theta2 => "theta2",
            Coord::V => "v",
            Coord::Bq => "b_q",
            Coord::SigmaQ2 => "sigma_q2",
        };
        f.write_str(s)
    }
}

/// Symmetric metric coefficients `ds² = Σ g_ij dx_i dx_j`.
///
/// A printed cross term `A dx dy` is stored as `g_xy = g_yx = A/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor<T: Scalar> {
    labels: Vec<Coord>,
    g: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeElement<T: Scalar> {
    pub value: T,
    pub det: T,
    pub degenerate: bool,
}

impl<T: Scalar> MetricTensor<T> {
    /// Builds from row-major coefficients; symmetry is checked to 1e-12 relative.
    pub fn new(labels: Vec<Coord>, g: Vec<T>) -> Result<Self> {
        let n = labels.len();
        if g.len() != n * n {
            return Err(Error::DimensionMismatch(n * n, g.len()));
        }
        let m = Self { labels, g };
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                let scale = a.abs().max(b.abs()).max(T::one());
                if (a - b).abs() > c::<T>(1e-12) * scale {
                    return Err(Error::Domain(format!(
                        "metric not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(m)
    }

    /// Diagonal entries plus the listed symmetric off-diagonal entries.
    pub fn from_parts(labels: Vec<Coord>, diag: &[T], off: &[(usize, usize, T)]) -> Self {
        let n = labels.len();
        let mut g = vec![T::zero(); n * n];
        for (i, &d) in diag.iter().enumerate() {
            g[i * n + i] = d;
        }
        for &(i, j, v) in off {
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
        Self { labels, g }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Coord] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.g[i * self.dim() + j]
    }

    pub fn entry(&self, a: Coord, b: Coord) -> Option<T> {
        let i = self.labels.iter().position(|&l| l == a)?;
        let j = self.labels.iter().position(|&l| l == b)?;
        Some(self.get(i, j))
    }

    pub fn coefficients(&self) -> &[T] {
        &self.g
    }

    /// `Σ g_ij dx_i dx_j`.
    pub fn line_element(&self, dx: &[T]) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + self.get(i, j) * dx[i] * dx[j];
            }
        }
        s
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> T {
        let n = self.dim();
        let mut a = self.g.clone();
        let mut det = T::one();
        for k in 0..n {
            let mut piv = k;
            for i in (k + 1)..n {
                if a[i * n + k].abs() > a[piv * n + k].abs() {
                    piv = i;
                }
            }
            if a[piv * n + k] == T::zero() {
                return T::zero();
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let akk = a[k * n + k];
            det = det * akk;
            for i in (k + 1)..n {
                let f = a[i * n + k] / akk;
                for j in k..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                }
            }
        }
        det
    }

    /// `|Π g_ii|`, the scale against which determinants are judged.
    pub fn diagonal_scale(&self) -> T {
        (0..self.dim()).fold(T::one(), |p, i| p * self.get(i, i)).abs()
    }

    /// `|det g| / |Π g_ii|`.
    pub fn degeneracy_ratio(&self) -> T {
        let scale = self.diagonal_scale();
        if scale == T::zero() {
            return T::infinity();
        }
        self.det().abs() / scale
    }

    pub fn volume_element(&self) -> VolumeElement<T> {
        let det = self.det();
        VolumeElement {
            value: det.max(T::zero()).sqrt(),
            det,
            degenerate: det.abs() < c::<T>(DEGENERACY_TOL) * self.diagonal_scale(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        symmetric_eigenvalues(self.dim(), &self.g)
    }

    /// Sub-tensor on the given coordinate indices.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        let g = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self { labels, g }
    }

    /// Largest `|a_ij − b_ij| / sqrt(|b_ii b_jj|)` against a reference tensor.
    pub fn max_relative_deviation(&self, reference: &Self) -> Result<T> {
        if self.labels != reference.labels {
            return Err(Error::DimensionMismatch(self.dim(), reference.dim()));
        }
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let scale = (reference.get(i, i) * reference.get(j, j)).abs().sqrt();
                let scale = scale.max(T::min_positive_value());
                worst = worst.max((self.get(i, j) - reference.get(i, j)).abs() / scale);
            }
        }
        Ok(worst)
    }
}

/// `√max(det g, 0)` with degeneracy flag.
pub fn volume_element<T: Scalar>(g: &MetricTensor<T>) -> VolumeElement<T> {
    g.volume_element()
}

impl<T: Scalar> fmt::Display for MetricTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let names: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(f, "coords: {}", names.join(", "))?;
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:>24.16e}", self.get(i, j))).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}
