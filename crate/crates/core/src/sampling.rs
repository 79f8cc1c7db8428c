//! Seeded Gaussian sampling from `N(0, Σ)` and entry-masked samples.
//!
//! Draws are `x = Σ^{1/2}·z` with the symmetric PSD root, which tolerates the
//! rank-deficient Σ produced by off-diagonal shrinkage. `z` is consumed in
//! ascending index order, so restricting a draw to a mask never changes the
//! values that are kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, psd_sqrt, SymMatrix};
use crate::spcov::SpCovInstance;

/// ChaCha8 keyed by `seed`, with `stream` selecting an independent sequence
/// (one per trial).
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// One standard normal variate (ziggurat method from `rand_distr`).
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform_index(&mut self, upper: usize) -> usize {
        self.inner.random_range(0..upper)
    }
}

pub fn standard_normal(rng: &mut SeededRng) -> f64 {
    rng.standard_normal()
}

/// A validated set of entry indices to retain from each draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    indices: Vec<usize>,
}

impl Mask {
    /// Sorts `indices`; rejects duplicates and indices `>= dim`.
    pub fn new(indices: &[usize], dim: usize) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if let Some(&bad) = sorted.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidMask(format!(
                "index {bad} out of range for dimension {dim}"
            )));
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask(format!("duplicate index {}", w[0])));
        }
        Ok(Self { indices: sorted })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One draw restricted to the mask entries. Nothing outside the mask is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl MaskedSample {
    /// Projects a full vector onto the mask.
    pub fn project(full: &[f64], mask: &Mask) -> Result<Self> {
        if let Some(&last) = mask.indices.last() {
            if last >= full.len() {
                return Err(Error::InvalidMask(format!(
                    "index {last} out of range for dimension {}",
                    full.len()
                )));
            }
        }
        Ok(Self {
            indices: mask.indices.clone(),
            values: mask.indices.iter().map(|&i| full[i]).collect(),
        })
    }

    /// Sorted node indices that were read.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of node `node`, if it was read.
    pub fn value_of(&self, node: usize) -> Option<f64> {
        self.indices
            .binary_search(&node)
            .ok()
            .map(|pos| self.values[pos])
    }
}

/// Sampler for `N(0, Σ)` holding `Σ^{1/2}`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: SymMatrix,
}

impl GaussianSampler {
    /// Fails with [`Error::NotPsd`] when Σ is not PSD.
    pub fn new(inst: &SpCovInstance) -> Result<Self> {
        Self::from_covariance(inst.sigma())
    }

    pub fn from_covariance(sigma: &SymMatrix) -> Result<Self> {
        Ok(Self {
            root: psd_sqrt(sigma)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn root(&self) -> &SymMatrix {
        &self.root
    }

    fn draw_z(&self, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.standard_normal()).collect()
    }

    pub fn draw(&self, rng: &mut SeededRng) -> Vec<f64> {
        let z = self.draw_z(rng);
        self.root.mul_vec(&z)
    }

    /// Draws the full `z` but only forms the masked rows of `Σ^{1/2}·z`;
    /// each kept value is computed exactly as in [`GaussianSampler::draw`].
    pub fn draw_with_mask(&self, rng: &mut SeededRng, mask: &Mask) -> MaskedSample {
        let z = self.draw_z(rng);
        MaskedSample {
            indices: mask.indices.clone(),
            values: mask
                .indices
                .iter()
                .map(|&i| dot(self.root.row(i), &z))
                .collect(),
        }
    }
}

/// Validates `mask` against the sampler dimension and draws.
pub fn draw_masked(
    sampler: &GaussianSampler,
    rng: &mut SeededRng,
    mask: &[usize],
) -> Result<MaskedSample> {
    let mask = Mask::new(mask, sampler.dim())?;
    Ok(sampler.draw_with_mask(rng, &mask))
}
