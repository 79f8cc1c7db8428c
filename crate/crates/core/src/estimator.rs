//! The sparse-ruler covariance estimator.
//!
//! Each sample exposes only the ruler-node entries. For every distance `s`
//! the estimator averages `x_i·x_j` over node pairs at graph distance `s`:
//! the lexicographically first pair in [`EstimatorMode::SinglePair`], all
//! pairs in [`EstimatorMode::Averaged`]. The estimate is assembled into
//! `Σ̃[i][j] = â[dist(i, j)]` without any PSD projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DistanceTable, GraphRuler};
use crate::linalg::{frobenius_norm, spectral_norm, SymMatrix};
use crate::ruler::Ruler;
use crate::sampling::{GaussianSampler, Mask, MaskedSample, SeededRng};
use crate::spcov::{assemble, CovVector, SpCovInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// One pair per distance: `â_0` uses the lowest-index ruler node.
    #[value(name = "single")]
    SinglePair,
    /// Every pair at each distance, `â_0` over all ruler nodes.
    #[value(name = "averaged")]
    Averaged,
}

/// Read access to the entries of one sample at a fixed set of nodes.
///
/// `position` indexes into `indices()`. The estimator touches samples only
/// through this trait.
pub trait RulerEntries {
    fn indices(&self) -> &[usize];
    fn value_at(&self, position: usize) -> f64;
}

impl RulerEntries for MaskedSample {
    fn indices(&self) -> &[usize] {
        MaskedSample::indices(self)
    }

    fn value_at(&self, position: usize) -> f64 {
        self.values()[position]
    }
}

/// Node pairs `R^G_s` of the graph ruler grouped by graph distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPairClasses {
    classes: Vec<Vec<(usize, usize)>>,
}

impl GraphPairClasses {
    pub fn class(&self, s: usize) -> &[(usize, usize)] {
        &self.classes[s]
    }

    pub fn classes(&self) -> &[Vec<(usize, usize)>] {
        &self.classes
    }
}

/// Unordered node pairs `(i, j)`, `i <= j`, per distance, sorted
/// lexicographically. Fails if some distance in `0..=D` has no pair.
pub fn graph_pair_classes(gr: &GraphRuler, t: &DistanceTable) -> Result<GraphPairClasses> {
    let mut nodes = gr.nodes.clone();
    nodes.sort_unstable();
    let mut classes = vec![Vec::new(); t.diameter() + 1];
    for (k, &i) in nodes.iter().enumerate() {
        for &j in &nodes[k..] {
            classes[t.dist(i, j)].push((i, j));
        }
    }
    for (s, c) in classes.iter_mut().enumerate() {
        if c.is_empty() {
            return Err(Error::NotARuler(format!(
                "no ruler node pair at distance {s}"
            )));
        }
        c.sort_unstable();
    }
    Ok(GraphPairClasses { classes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    /// `‖Σ − Σ̃‖₂ / ‖Σ‖₂`.
    pub spectral_rel: f64,
    /// `‖Σ − Σ̃‖_F / ‖Σ‖_F`.
    pub frob_rel: f64,
    pub max_entry: f64,
    /// `‖Σ − Σ̃‖₂ / ‖Σ̃‖₂`; `None` when Σ̃ is zero.
    pub spectral_rel_to_estimate: Option<f64>,
}

pub fn error_metrics(sigma: &SymMatrix, sigma_hat: &SymMatrix) -> Result<ErrorMetrics> {
    let diff = sigma.sub(sigma_hat)?;
    let norm = spectral_norm(sigma)?;
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error against a zero covariance".into(),
        ));
    }
    let diff_norm = spectral_norm(&diff)?;
    let hat_norm = spectral_norm(sigma_hat)?;
    Ok(ErrorMetrics {
        spectral_rel: diff_norm / norm,
        frob_rel: frobenius_norm(&diff) / frobenius_norm(sigma),
        max_entry: diff.max_abs(),
        spectral_rel_to_estimate: (hat_norm > 0.0).then(|| diff_norm / hat_norm),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub a_hat: CovVector,
    pub sigma_hat: SymMatrix,
    /// Entries read per sample.
    pub esc: usize,
    /// Number of vector samples.
    pub vsc: usize,
    pub metrics: Option<ErrorMetrics>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    a_hat: &'a [f64],
    esc: usize,
    vsc: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frob_rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_entry_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_rel_err_to_estimate: Option<f64>,
}

impl Serialize for EstimateReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let m = self.metrics.as_ref();
        ReportJson {
            a_hat: self.a_hat.as_slice(),
            esc: self.esc,
            vsc: self.vsc,
            spectral_rel_err: m.map(|m| m.spectral_rel),
            frob_rel_err: m.map(|m| m.frob_rel),
            max_entry_err: m.map(|m| m.max_entry),
            spectral_rel_err_to_estimate: m.and_then(|m| m.spectral_rel_to_estimate),
        }
        .serialize(serializer)
    }
}

impl EstimateReport {
    /// Fills in error metrics against the true covariance.
    pub fn with_truth(mut self, sigma: &SymMatrix) -> Result<Self> {
        self.metrics = Some(error_metrics(sigma, &self.sigma_hat)?);
        Ok(self)
    }
}

// Pair classes translated to positions within the sorted ruler node list.
fn position_classes(
    classes: &GraphPairClasses,
    sorted_nodes: &[usize],
    mode: EstimatorMode,
) -> Vec<Vec<(usize, usize)>> {
    let pos = |v: usize| {
        sorted_nodes
            .binary_search(&v)
            .expect("pair node is a ruler node")
    };
    classes
        .classes
        .iter()
        .map(|c| {
            let take = match mode {
                EstimatorMode::SinglePair => 1,
                EstimatorMode::Averaged => c.len(),
            };
            c.iter()
                .take(take)
                .map(|&(i, j)| (pos(i), pos(j)))
                .collect()
        })
        .collect()
}

/// Recovers `â` from ruler-restricted samples and assembles Σ̃.
pub fn estimate<S: RulerEntries>(
    samples: &[S],
    gr: &GraphRuler,
    t: &DistanceTable,
    mode: EstimatorMode,
) -> Result<EstimateReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "estimate needs n >= 1 samples".into(),
        ));
    }
    let mut nodes = gr.nodes.clone();
    nodes.sort_unstable();
    for (l, s) in samples.iter().enumerate() {
        if s.indices() != nodes.as_slice() {
            return Err(Error::InvalidMask(format!(
                "sample {l} reads {:?}, expected the ruler nodes {nodes:?}",
                s.indices()
            )));
        }
    }
    let classes = graph_pair_classes(gr, t)?;
    let by_position = position_classes(&classes, &nodes, mode);

    let mut sums = vec![0.0; by_position.len()];
    for sample in samples {
        for (acc, pairs) in sums.iter_mut().zip(&by_position) {
            for &(p, q) in pairs {
                *acc += sample.value_at(p) * sample.value_at(q);
            }
        }
    }
    let n = samples.len() as f64;
    let a_hat = CovVector(
        sums.iter()
            .zip(&by_position)
            .map(|(sum, pairs)| sum / (n * pairs.len() as f64))
            .collect(),
    );
    let sigma_hat = assemble(t, &a_hat)?;
    Ok(EstimateReport {
        a_hat,
        sigma_hat,
        esc: gr.esc(),
        vsc: samples.len(),
        metrics: None,
    })
}

/// `(1/n)·Σ x·xᵀ` over full sample vectors.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<SymMatrix> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("empirical covariance needs n >= 1".into()))?;
    let d = first.len();
    let mut acc = vec![0.0; d * d];
    for x in samples {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        for i in 0..d {
            let xi = x[i];
            for j in 0..d {
                acc[i * d + j] += xi * x[j];
            }
        }
    }
    let n = samples.len() as f64;
    SymMatrix::from_row_major(d, acc.into_iter().map(|v| v / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
}

/// An instance with its graph ruler and sampler, ready for repeated runs.
#[derive(Debug, Clone)]
pub struct RulerPipeline {
    instance: SpCovInstance,
    ruler: GraphRuler,
    mask: Mask,
    sampler: GaussianSampler,
}

impl RulerPipeline {
    pub fn new(instance: SpCovInstance, ruler: &Ruler) -> Result<Self> {
        let gr = crate::graph::graph_sparse_ruler(instance.graph(), instance.distances(), ruler)?;
        let mask = Mask::new(&gr.nodes, instance.dim())?;
        let sampler = GaussianSampler::new(&instance)?;
        Ok(Self {
            instance,
            ruler: gr,
            mask,
            sampler,
        })
    }

    pub fn instance(&self) -> &SpCovInstance {
        &self.instance
    }

    pub fn graph_ruler(&self) -> &GraphRuler {
        &self.ruler
    }

    pub fn sampler(&self) -> &GaussianSampler {
        &self.sampler
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// Draws `cfg.n` masked samples from stream `(cfg.seed, cfg.stream)`.
    pub fn draw(&self, cfg: &EstimatorConfig) -> Vec<MaskedSample> {
        let mut rng = SeededRng::new(cfg.seed, cfg.stream);
        (0..cfg.n)
            .map(|_| self.sampler.draw_with_mask(&mut rng, &self.mask))
            .collect()
    }

    /// Draws, estimates, and scores against the true Σ.
    pub fn run(&self, cfg: &EstimatorConfig) -> Result<EstimateReport> {
        if cfg.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let samples = self.draw(cfg);
        estimate(&samples, &self.ruler, self.instance.distances(), cfg.mode)?
            .with_truth(self.instance.sigma())
    }
}
