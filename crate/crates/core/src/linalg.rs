//! Dense symmetric matrices and the cyclic Jacobi eigensolver.
//!
//! Everything downstream (Σ, Σ̃, ruler submatrices, error matrices, KL
//! computations) goes through [`SymMatrix`] and [`eigh`]. Sizes are desk scale,
//! a few hundred rows at most, so the O(d³) per-sweep cost is fine.

use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Relative off-diagonal Frobenius mass at which Jacobi stops.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds `(F + Fᵀ)/2` where `F[i][j] = f(i, j)`. When `f` is already
    /// symmetric the result is exact.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = f(i, j);
            }
        }
        let mut m = Self { dim, data };
        m.symmetrize();
        m
    }

    /// Builds from row-major storage, symmetrizing.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let mut m = Self { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn principal_submatrix(&self, indices: &[usize]) -> SymMatrix {
        let k = indices.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                data.push(self.get(i, j));
            }
        }
        SymMatrix { dim: k, data }
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SymMatrix {
            dim: self.dim,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// General product `A·B`, symmetrized. Only meaningful when `A` and `B`
    /// commute (e.g. `B = A`), which is how it is used.
    pub fn mul_sym(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let out = &mut data[i * n..(i + 1) * n];
                for (o, b) in out.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        SymMatrix::from_row_major(n, data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigendecomposition `A = U·diag(values)·Uᵀ`, values sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    /// Column-major: `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomp {
    /// `U·diag(f(λ))·Uᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[k][i] * fl[k] * self.vectors[k][j])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps over all `(p, q)` pairs in row order until the off-diagonal
/// Frobenius mass drops below `OFF_DIAGONAL_TOL · ‖A‖_F`.
pub fn eigh(a: &SymMatrix) -> Result<EigenDecomp> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim;
    let mut m = a.data.clone();
    // v is row-major; column k holds the k-th eigenvector.
    let mut v = SymMatrix::identity(n).data;

    let frob = frobenius_norm(a);
    let threshold = OFF_DIAGONAL_TOL * frob;

    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if off_diagonal_norm(&m, n) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate_columns(&mut m, n, p, q, c, s);
                rotate_rows(&mut m, n, p, q, c, s);
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                rotate_columns(&mut v, n, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    Ok(EigenDecomp { values, vectors })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j] * m[i * n + j];
            }
        }
    }
    s.sqrt()
}

// M ← M·J with J = [[c, s], [-s, c]] in the (p, q) plane.
fn rotate_columns(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = c * mkp - s * mkq;
        m[k * n + q] = s * mkp + c * mkq;
    }
}

// M ← Jᵀ·M.
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = c * mpk - s * mqk;
        m[q * n + k] = s * mpk + c * mqk;
    }
}

/// `max |λ_i|`.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    let e = eigh(a)?;
    Ok(e.values.iter().fold(0.0_f64, |m, l| m.max(l.abs())))
}

pub fn frobenius_norm(a: &SymMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn trace(a: &SymMatrix) -> f64 {
    (0..a.dim).map(|i| a.get(i, i)).sum()
}

pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64> {
    let e = eigh(a)?;
    Ok(e.values.last().copied().unwrap_or(0.0))
}

/// Tolerance below zero that still counts as PSD: `1e-8 · max(1, ‖A‖₂)`.
pub fn psd_tolerance(spectral: f64) -> f64 {
    1e-8 * spectral.max(1.0)
}

/// Symmetric PSD square root `U·√max(λ, 0)·Uᵀ`.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eigh(a)?;
    let spectral = e.values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let tol = psd_tolerance(spectral);
    let min_eig = e.values.last().copied().unwrap_or(0.0);
    if min_eig < -tol {
        return Err(Error::NotPsd { min_eig, tol });
    }
    Ok(e.reconstruct_with(|l| l.max(0.0).sqrt()))
}
