//! Sample-complexity sweeps and the lower-bound diagnostics.
//!
//! A sweep runs the ruler estimator for every `(n, trial)` pair. Trial `t`
//! draws from RNG stream `t` under the sweep seed, so rows are a pure
//! function of the configuration regardless of how rayon schedules them.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorMode, RulerPipeline};
use crate::fmt::csv_float;
use crate::linalg::{eigh, SymMatrix};
use crate::ruler::{ruler_prop31, Ruler};
use crate::spcov::SpCovInstance;

/// Which marks to place along the diameter path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RulerMode {
    /// The two-block `O(√D)` ruler.
    Sparse,
    /// Every position `0..=D`.
    Complete,
}

impl RulerMode {
    pub fn ruler(self, diameter: usize) -> Ruler {
        match self {
            RulerMode::Sparse => ruler_prop31(diameter),
            RulerMode::Complete => Ruler::complete(diameter),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub ruler: RulerMode,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub mode: EstimatorMode,
    /// Measure per-row wall time. Off by default so that sweep output is
    /// byte-reproducible; `wall_ms` is then written as 0.
    pub record_timing: bool,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidArgument(
                "n_list must be nonempty with every n >= 1".into(),
            ));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "n_list must be strictly ascending".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub trial: usize,
    pub spectral_rel: f64,
    pub frob_rel: f64,
    pub max_entry: f64,
    pub wall_ms: f64,
}

/// Quartiles of `spectral_rel` at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub n: usize,
    pub trials: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

pub const CSV_HEADER: &str = "n,trial,spectral_rel,frob_rel,max_entry,wall_ms";

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.n,
                r.trial,
                csv_float(r.spectral_rel),
                csv_float(r.frob_rel),
                csv_float(r.max_entry),
                csv_float(r.wall_ms)
            )?;
        }
        Ok(())
    }

    pub fn aggregate(&self, n: usize) -> Option<&SweepAggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn run_sweep(inst: &SpCovInstance, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ruler = cfg.ruler.ruler(inst.distances().diameter());
    let pipeline = RulerPipeline::new(inst.clone(), &ruler)?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();

    let mut rows = jobs
        .par_iter()
        .map(|&(n, trial)| -> Result<SweepRow> {
            let start = Instant::now();
            let report = pipeline.run(&EstimatorConfig {
                mode: cfg.mode,
                n,
                seed: cfg.seed,
                stream: trial as u64,
            })?;
            let m = report.metrics.expect("run scores against the truth");
            let wall_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(SweepRow {
                n,
                trial,
                spectral_rel: m.spectral_rel,
                frob_rel: m.frob_rel,
                max_entry: m.max_entry,
                wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.n, r.trial));

    let aggregates = cfg
        .n_list
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.spectral_rel)
                .collect();
            errs.sort_by(f64::total_cmp);
            SweepAggregate {
                n,
                trials: errs.len(),
                median: quantile(&errs, 0.5),
                q25: quantile(&errs, 0.25),
                q75: quantile(&errs, 0.75),
            }
        })
        .collect();
    Ok(SweepResult { rows, aggregates })
}

/// `KL(N(0, Σ₁) ‖ N(0, Σ₂)) = ½[Tr(Σ₂⁻¹Σ₁) − d − log(det Σ₁ / det Σ₂)]`.
///
/// Inverse and log-determinants come from eigendecompositions. A singular
/// Σ₁ gives `+∞`; a singular Σ₂ is an error.
pub fn gaussian_kl(sigma1: &SymMatrix, sigma2: &SymMatrix) -> Result<f64> {
    if sigma1.dim() != sigma2.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma1.dim(),
            got: sigma2.dim(),
        });
    }
    let d = sigma1.dim();
    let e2 = eigh(sigma2)?;
    let top = e2.values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let min2 = e2.values.last().copied().unwrap_or(0.0);
    if min2 <= 1e-12 * top || min2 <= 0.0 {
        return Err(Error::Singular(format!(
            "second covariance has minimum eigenvalue {min2:e}"
        )));
    }
    let e1 = eigh(sigma1)?;
    if e1.values.last().copied().unwrap_or(0.0) <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let trace_term: f64 = e2
        .values
        .iter()
        .zip(&e2.vectors)
        .map(|(l, u)| crate::linalg::dot(u, &sigma1.mul_vec(u)) / l)
        .sum();
    let logdet1: f64 = e1.values.iter().map(|l| l.ln()).sum();
    let logdet2: f64 = e2.values.iter().map(|l| l.ln()).sum();
    let kl = 0.5 * (trace_term - d as f64 - logdet1 + logdet2);
    Ok(if kl < 0.0 && kl >= -1e-9 { 0.0 } else { kl })
}

/// `KL(N(0, I_s) ‖ N(0, I_s + β·J_s)) = ½[log(1 + βs) − βs/(1 + βs)]`.
pub fn spiked_kl(s: usize, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let x = beta * s as f64;
    Ok(0.5 * (x.ln_1p() - x / (1.0 + x)))
}

/// Pinsker bound on the TV distance between `n`-fold products:
/// `min(1, √(n·KL/2))`.
pub fn pinsker_nfold_tv(kl_single: f64, n: u64) -> f64 {
    (n as f64 * kl_single / 2.0).sqrt().min(1.0)
}

/// TV level at which the two hypotheses count as distinguishable.
pub const DISTINGUISH_TV: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub d: usize,
    pub s: usize,
    pub eps: f64,
    pub n: u64,
    pub kl: f64,
    pub tv_upper: f64,
    pub distinguishable: bool,
    /// Smallest `n` whose Pinsker bound reaches 2/3; `None` means never.
    pub n_star: Option<u64>,
    /// `‖Σ₁ − Σ₂‖₂ = ‖(ε/d)·J‖₂`.
    pub spectral_gap: f64,
}

/// Diagnostics for `Σ₁ = I` versus `Σ₂ = I + (ε/d)·J` read on `s` entries.
pub fn lower_bound_report(d: usize, s: usize, eps: f64, n: u64) -> Result<LowerBoundReport> {
    if d == 0 || s == 0 || s > d {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= s <= d, got s = {s}, d = {d}"
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let beta = eps / d as f64;
    let kl = spiked_kl(s, beta)?;
    let tv_upper = pinsker_nfold_tv(kl, n);
    Ok(LowerBoundReport {
        d,
        s,
        eps,
        n,
        kl,
        tv_upper,
        distinguishable: tv_upper >= DISTINGUISH_TV,
        n_star: n_star(kl),
        // rank one: spectral norm equals Frobenius norm β·d
        spectral_gap: beta * d as f64,
    })
}

fn n_star(kl: f64) -> Option<u64> {
    if !(kl > 0.0) {
        return None;
    }
    // √(n·kl/2) ≥ 2/3  ⇔  n ≥ 8/(9·kl)
    let guess = (8.0 / (9.0 * kl)).ceil();
    if guess > 2f64.powi(53) {
        return None;
    }
    let mut n = (guess as u64).max(1);
    while n > 1 && pinsker_nfold_tv(kl, n - 1) >= DISTINGUISH_TV {
        n -= 1;
    }
    while pinsker_nfold_tv(kl, n) < DISTINGUISH_TV {
        n += 1;
    }
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_shortest_paths, make_graph, GraphSpec};
    use crate::linalg::spectral_norm;
    use crate::spcov::{graph_cov, CovVector};

    fn spiked(s: usize, beta: f64) -> SymMatrix {
        SymMatrix::from_fn(s, |i, j| if i == j { 1.0 + beta } else { beta })
    }

    fn path_instance(d: usize, rho: f64) -> SpCovInstance {
        let g = make_graph(&GraphSpec::path(d)).unwrap();
        let t = all_pairs_shortest_paths(&g).unwrap();
        graph_cov(&g, &t, CovVector::geometric(rho, d - 1)).unwrap()
    }

    fn cfg(n_list: Vec<usize>, trials: usize) -> SweepConfig {
        SweepConfig {
            ruler: RulerMode::Sparse,
            n_list,
            trials,
            seed: 17,
            mode: EstimatorMode::SinglePair,
            record_timing: false,
        }
    }

    #[test]
    fn single_row_sweep() {
        let r = run_sweep(&path_instance(6, 0.5), &cfg(vec![1], 1)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.aggregates.len(), 1);
    }

    #[test]
    fn sweep_csv_is_deterministic() {
        let inst = path_instance(10, 0.8);
        let c = cfg(vec![10, 100], 7);
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_sweep(&inst, &c).unwrap().write_csv(&mut a).unwrap();
        run_sweep(&inst, &c).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        assert_eq!(text.lines().count(), 15);
    }

    #[test]
    fn sweep_rejects_bad_config() {
        let inst = path_instance(4, 0.5);
        assert!(run_sweep(&inst, &cfg(vec![], 1)).is_err());
        assert!(run_sweep(&inst, &cfg(vec![10, 5], 1)).is_err());
        assert!(run_sweep(&inst, &cfg(vec![10], 0)).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn kl_examples() {
        let s = spiked(3, 0.2);
        assert_eq!(gaussian_kl(&s, &s).unwrap(), 0.0);

        let want = 0.5 * (2f64.ln() - 0.5);
        let kl = gaussian_kl(&SymMatrix::identity(2), &spiked(2, 0.5)).unwrap();
        assert!((kl - want).abs() < 1e-12);
        assert!((spiked_kl(2, 0.5).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.096574).abs() < 1e-6);

        assert_eq!(spiked_kl(7, 0.0).unwrap(), 0.0);
        let singular = SymMatrix::from_fn(2, |_, _| 1.0);
        assert!(matches!(
            gaussian_kl(&SymMatrix::identity(2), &singular),
            Err(Error::Singular(_))
        ));
        assert_eq!(
            gaussian_kl(&singular, &SymMatrix::identity(2)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn spiked_kl_matches_materialized() {
        for s in [1, 5, 20, 100] {
            for beta in [0.001, 0.01, 0.1] {
                let closed = spiked_kl(s, beta).unwrap();
                if s <= 20 {
                    let dense = gaussian_kl(&SymMatrix::identity(s), &spiked(s, beta)).unwrap();
                    assert!((closed - dense).abs() <= 1e-9, "s={s} beta={beta}");
                }
                assert!(closed <= (beta * s as f64).powi(2));
            }
        }
    }

    #[test]
    fn pinsker_examples() {
        assert_eq!(pinsker_nfold_tv(0.0, 5), 0.0);
        assert_eq!(pinsker_nfold_tv(2.0, 1), 1.0);
        assert!((pinsker_nfold_tv(0.01, 8) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        let r = lower_bound_report(10, 3, 0.0, 1000).unwrap();
        assert_eq!(r.n_star, None);
        assert!(!r.distinguishable);

        for d in [2, 10, 100] {
            let eps = 0.3;
            let gap = SymMatrix::from_fn(d, |_, _| eps / d as f64);
            assert!((spectral_norm(&gap).unwrap() - eps).abs() <= 1e-10);
            let r = lower_bound_report(d, 1, eps, 1).unwrap();
            assert!((r.spectral_gap - eps).abs() <= 1e-15);
        }

        let small = lower_bound_report(100, 10, 0.3, 1).unwrap().n_star.unwrap();
        let large = lower_bound_report(400, 10, 0.3, 1).unwrap().n_star.unwrap();
        let ratio = large as f64 / small as f64;
        assert!((14.0..=18.0).contains(&ratio), "{ratio}");

        let r = lower_bound_report(100, 10, 0.3, small).unwrap();
        assert!(r.distinguishable);
        let r = lower_bound_report(100, 10, 0.3, small - 1).unwrap();
        assert!(!r.distinguishable);

        assert!(lower_bound_report(10, 11, 0.3, 1).is_err());
        assert!(lower_bound_report(10, 0, 0.3, 1).is_err());
        assert!(lower_bound_report(10, 2, -0.3, 1).is_err());
    }
}
