//! Circulant embedding of symmetric Toeplitz matrices.
//!
//! A `d×d` symmetric Toeplitz matrix with first row `t` sits in the top-left
//! corner of the `2d×2d` circulant with first row
//! `(t_0, …, t_{d−1}, 0, t_{d−1}, …, t_1)`. The circulant is diagonalized by
//! the DFT, so its eigenvalues are
//!
//! ```text
//! λ_k = t_0 + 2·Σ_{j=1}^{d−1} t_j·cos(π·j·k/d),   k = 0..2d−1
//! ```
//!
//! and `‖T‖₂ ≤ ‖C‖₂ = max_k |λ_k|`. Applied to the error vector `e = a − â`
//! of a path-graph estimate this certifies the spectral error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::diameter_path;
use crate::linalg::{spectral_norm, SymMatrix};
use crate::ruler::{coverage_deficiency, pair_classes, Ruler};
use crate::spcov::SpCovInstance;

/// First row of a symmetric Toeplitz matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ToeplitzVec(Vec<f64>);

impl ToeplitzVec {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::InvalidArgument(
                "Toeplitz vector must be nonempty".into(),
            ));
        }
        Ok(Self(t))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_matrix(&self) -> SymMatrix {
        SymMatrix::from_fn(self.dim(), |i, j| self.0[i.abs_diff(j)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirculantEmbedding {
    pub c: Vec<f64>,
}

impl CirculantEmbedding {
    /// The dense `2d×2d` circulant, `C[i][j] = c[(j − i) mod 2d]`.
    pub fn to_matrix(&self) -> SymMatrix {
        let m = self.c.len();
        SymMatrix::from_fn(m, |i, j| self.c[(j + m - i) % m])
    }
}

pub fn embed(tv: &ToeplitzVec) -> CirculantEmbedding {
    let t = &tv.0;
    let mut c = Vec::with_capacity(2 * t.len());
    c.extend_from_slice(t);
    c.push(0.0);
    c.extend(t[1..].iter().rev());
    CirculantEmbedding { c }
}

/// `max_k |t_0 + 2·Σ_j t_j·cos(π·j·k/d)|` over the `2d` grid frequencies.
fn grid_max_abs(t: &[f64]) -> f64 {
    let d = t.len();
    let period = 2 * d;
    // cos(π·m/d) for every residue m = j·k mod 2d
    let table: Vec<f64> = (0..period)
        .map(|m| (std::f64::consts::PI * m as f64 / d as f64).cos())
        .collect();
    (0..period)
        .map(|k| {
            let tail: f64 = t
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, tj)| tj * table[(j * k) % period])
                .sum();
            (t[0] + 2.0 * tail).abs()
        })
        .fold(0.0, f64::max)
}

/// Upper bound on `‖T‖₂` from the embedding's eigenvalues.
pub fn circulant_spectral_bound(tv: &ToeplitzVec) -> f64 {
    grid_max_abs(&tv.0)
}

/// `max_x |L_e(x)|` on `x = k/2d`: a certified upper bound on the spectral
/// norm of the symmetric Toeplitz error matrix with first row `e`.
pub fn le_certificate(e: &ToeplitzVec) -> f64 {
    grid_max_abs(&e.0)
}

/// Error vector `a − â` between two distance vectors of equal length.
pub fn error_vector(a: &[f64], a_hat: &[f64]) -> Result<ToeplitzVec> {
    if a.len() != a_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: a_hat.len(),
        });
    }
    ToeplitzVec::new(a.iter().zip(a_hat).map(|(x, y)| x - y).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub kappa: f64,
    pub delta: f64,
    pub sigma_norm: f64,
    pub ruler_norm: f64,
}

/// `κ = min(1, ε²‖Σ‖₂² / (Δ(R)·‖Σ_R‖₂²))`.
///
/// `Σ_R` is the principal submatrix at the ruler's nodes along the diameter
/// path; on a path graph these are the ruler positions themselves. `Δ(R)`
/// uses unordered pair classes.
pub fn kappa(inst: &SpCovInstance, r: &Ruler, eps: f64) -> Result<Kappa> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let t = inst.distances();
    if r.diameter() != t.diameter() {
        return Err(Error::NotARuler(format!(
            "ruler is for D = {} but the graph diameter is {}",
            r.diameter(),
            t.diameter()
        )));
    }
    let path = diameter_path(inst.graph(), t);
    let nodes: Vec<usize> = r.marks().iter().map(|&p| path.nodes[p]).collect();
    let sigma_norm = spectral_norm(inst.sigma())?;
    let ruler_norm = spectral_norm(&inst.sigma().principal_submatrix(&nodes))?;
    let delta = coverage_deficiency(&pair_classes(r))?.0;
    let ratio = eps * eps * sigma_norm * sigma_norm / (delta * ruler_norm * ruler_norm);
    Ok(Kappa {
        kappa: ratio.min(1.0),
        delta,
        sigma_norm,
        ruler_norm,
    })
}

/// `log(d/δ) / (c·κ)` for a caller-chosen constant `c`.
pub fn predicted_vsc(kappa: f64, d: usize, delta: f64, c: f64) -> Result<f64> {
    if !(kappa > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0) || d == 0 {
        return Err(Error::InvalidArgument(
            "predicted_vsc needs kappa > 0, 0 < delta < 1, c > 0, d >= 1".into(),
        ));
    }
    Ok((d as f64 / delta).ln() / (c * kappa))
}
