//! The shortest-path covariance model `Σ[i][j] = a[dist(i, j)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs_shortest_paths, DistanceTable, Graph};
use crate::linalg::{self, eigh, SymMatrix};

/// Covariance per hop distance, `a[0..=D]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovVector(pub Vec<f64>);

impl CovVector {
    /// `a[s] = ρ^s` for `s ∈ 0..=D`.
    pub fn geometric(rho: f64, diameter: usize) -> Self {
        Self((0..=diameter).map(|s| rho.powi(s as i32)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Materializes `Σ[i][j] = a[dist(i, j)]`. No PSD requirement.
pub fn assemble(t: &DistanceTable, a: &CovVector) -> Result<SymMatrix> {
    if a.len() != t.diameter() + 1 {
        return Err(Error::DimensionMismatch {
            expected: t.diameter() + 1,
            got: a.len(),
        });
    }
    let n = t.node_count();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        data.extend((0..n).map(|j| a.0[t.dist(i, j)]));
    }
    SymMatrix::from_row_major(n, data)
}

/// A graph together with its distance vector and the realized Σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct SpCovInstance {
    graph: Graph,
    distances: DistanceTable,
    a: CovVector,
    sigma: SymMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    graph: Graph,
    a: CovVector,
}

impl TryFrom<InstanceJson> for SpCovInstance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        let t = all_pairs_shortest_paths(&raw.graph)?;
        graph_cov(&raw.graph, &t, raw.a)
    }
}

impl From<SpCovInstance> for InstanceJson {
    fn from(inst: SpCovInstance) -> Self {
        InstanceJson {
            graph: inst.graph,
            a: inst.a,
        }
    }
}

impl SpCovInstance {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.distances
    }

    pub fn a(&self) -> &CovVector {
        &self.a
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
}

pub fn graph_cov(g: &Graph, t: &DistanceTable, a: CovVector) -> Result<SpCovInstance> {
    let sigma = assemble(t, &a)?;
    Ok(SpCovInstance {
        graph: g.clone(),
        distances: t.clone(),
        a,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eig: f64,
}

pub fn validate_psd(inst: &SpCovInstance) -> Result<PsdCheck> {
    check_psd(&inst.sigma)
}

fn check_psd(sigma: &SymMatrix) -> Result<PsdCheck> {
    let e = eigh(sigma)?;
    let spectral = e.values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let min_eig = e.values.last().copied().unwrap_or(0.0);
    Ok(PsdCheck {
        psd: min_eig >= -linalg::psd_tolerance(spectral),
        min_eig,
    })
}

/// Resolution of the off-diagonal shrinkage grid.
pub const SHRINK_GRID: u32 = 1024;

/// Result of [`make_psd_instance`]: the instance and the applied shrinkage
/// `γ = steps / 1024`.
#[derive(Debug, Clone)]
pub struct PsdInstance {
    pub instance: SpCovInstance,
    pub gamma_steps: u32,
}

impl PsdInstance {
    pub fn gamma(&self) -> f64 {
        f64::from(self.gamma_steps) / f64::from(SHRINK_GRID)
    }
}

fn shrink(base: &CovVector, steps: u32) -> CovVector {
    let gamma = f64::from(steps) / f64::from(SHRINK_GRID);
    let mut a = base.0.clone();
    for v in a.iter_mut().skip(1) {
        *v *= gamma;
    }
    CovVector(a)
}

/// Scales `a[1..]` by the largest `γ ∈ {0, 1/1024, …, 1}` that keeps Σ PSD.
///
/// The PSD set is convex and contains `γ = 0` (a positive diagonal), so the
/// feasible γ form an interval and bisection on the grid finds its end.
pub fn make_psd_instance(g: &Graph, base_a: &CovVector) -> Result<PsdInstance> {
    match base_a.0.first() {
        Some(&a0) if a0 > 0.0 => {}
        _ => {
            return Err(Error::InvalidArgument(
                "a[0] must be positive to build a PSD instance".into(),
            ))
        }
    }
    let t = all_pairs_shortest_paths(g)?;
    let psd_at =
        |steps: u32| -> Result<bool> { Ok(check_psd(&assemble(&t, &shrink(base_a, steps))?)?.psd) };

    let steps = if psd_at(SHRINK_GRID)? {
        SHRINK_GRID
    } else {
        let (mut lo, mut hi) = (0u32, SHRINK_GRID);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if psd_at(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(PsdInstance {
        instance: graph_cov(g, &t, shrink(base_a, steps))?,
        gamma_steps: steps,
    })
}

/// `Tr(Σ)/‖Σ‖₂`, the effective rank that drives the estimator's sample
/// complexity.
pub fn stable_rank(inst: &SpCovInstance) -> Result<f64> {
    let spectral = linalg::spectral_norm(&inst.sigma)?;
    if spectral == 0.0 {
        return Err(Error::InvalidArgument(
            "stable rank of the zero matrix".into(),
        ));
    }
    Ok(linalg::trace(&inst.sigma) / spectral)
}

/// Block structure of a star covariance. Depth indices `p, q` run over
/// `0..Δ`, nearest-to-center first.
#[derive(Debug, Clone, PartialEq)]
pub struct StarBlocks {
    /// Toeplitz covariance of a leaf-to-leaf diameter path, `(2Δ+1)²`.
    pub sigma1: SymMatrix,
    /// Within one branch: `a[|p − q|]`.
    pub sigma2: SymMatrix,
    /// Between two branches: `a[p + q + 2]`.
    pub sigma3: SymMatrix,
    /// Branch to center: `a[p + 1]`.
    pub sigma4: Vec<f64>,
}

impl StarBlocks {
    pub fn depth(&self) -> usize {
        self.sigma4.len()
    }

    /// Row index in `sigma1` of depth `p` (0-based) on the first or second
    /// branch of the diameter path. The center sits at index `Δ`.
    pub fn sigma1_index(&self, second_branch: bool, p: usize) -> usize {
        let depth = self.depth();
        if second_branch {
            depth + 1 + p
        } else {
            depth - 1 - p
        }
    }
}

fn star_node(depth: usize, branch: usize, p: usize) -> usize {
    1 + branch * depth + p
}

/// Reads the blocks out of a star instance's Σ.
pub fn star_blocks(inst: &SpCovInstance) -> Result<StarBlocks> {
    let (_, depth) = inst
        .graph
        .star_shape()
        .ok_or_else(|| Error::InvalidArgument("instance graph is not a star".into()))?;
    let s = &inst.sigma;
    // first branch outward-in, center, second branch inward-out
    let path: Vec<usize> = (0..depth)
        .rev()
        .map(|p| star_node(depth, 0, p))
        .chain(std::iter::once(0))
        .chain((0..depth).map(|p| star_node(depth, 1, p)))
        .collect();
    Ok(StarBlocks {
        sigma1: s.principal_submatrix(&path),
        sigma2: SymMatrix::from_fn(depth, |p, q| {
            s.get(star_node(depth, 0, p), star_node(depth, 0, q))
        }),
        sigma3: SymMatrix::from_fn(depth, |p, q| {
            s.get(star_node(depth, 0, p), star_node(depth, 1, q))
        }),
        sigma4: (0..depth)
            .map(|p| s.get(star_node(depth, 0, p), 0))
            .collect(),
    })
}

/// Rebuilds the full star covariance with `branches` branches from its blocks.
pub fn star_assemble(blocks: &StarBlocks, branches: usize) -> SymMatrix {
    let depth = blocks.depth();
    let n = branches * depth + 1;
    let center = blocks.sigma1.get(depth, depth);
    let locate = |v: usize| ((v - 1) / depth, (v - 1) % depth);
    SymMatrix::from_fn(n, |i, j| match (i, j) {
        (0, 0) => center,
        (0, v) | (v, 0) => blocks.sigma4[locate(v).1],
        _ => {
            let (bi, p) = locate(i);
            let (bj, q) = locate(j);
            if bi == bj {
                blocks.sigma2.get(p, q)
            } else {
                blocks.sigma3.get(p, q)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_graph, GraphSpec};
    use proptest::prelude::*;

    fn instance(spec: GraphSpec, a: Vec<f64>) -> SpCovInstance {
        let g = make_graph(&spec).unwrap();
        let t = all_pairs_shortest_paths(&g).unwrap();
        graph_cov(&g, &t, CovVector(a)).unwrap()
    }

    #[test]
    fn graph_cov_examples() {
        let inst = instance(GraphSpec::path(3), vec![1.0, 0.6, 0.2]);
        let want = SymMatrix::from_rows(&[
            vec![1.0, 0.6, 0.2],
            vec![0.6, 1.0, 0.6],
            vec![0.2, 0.6, 1.0],
        ])
        .unwrap();
        assert_eq!(inst.sigma(), &want);

        let inst = instance(GraphSpec::complete(4), vec![1.0, 0.25]);
        let want = SymMatrix::from_fn(4, |i, j| if i == j { 1.0 } else { 0.25 });
        assert_eq!(inst.sigma(), &want);

        let inst = instance(GraphSpec::star(3, 1), vec![1.0, 0.5, 0.25]);
        assert_eq!(inst.sigma().get(0, 2), 0.5);
        assert_eq!(inst.sigma().get(1, 3), 0.25);
    }

    #[test]
    fn graph_cov_length_mismatch() {
        let g = make_graph(&GraphSpec::path(3)).unwrap();
        let t = all_pairs_shortest_paths(&g).unwrap();
        assert!(matches!(
            graph_cov(&g, &t, CovVector(vec![1.0, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        let c = validate_psd(&instance(GraphSpec::complete(4), vec![1.0, -0.4])).unwrap();
        assert!(!c.psd);
        assert!((c.min_eig + 0.2).abs() < 1e-12);

        let c = validate_psd(&instance(
            GraphSpec::grid(3, 3),
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
        ))
        .unwrap();
        assert!(c.psd);

        let a = CovVector::geometric(0.8, 11);
        let c = validate_psd(&instance(GraphSpec::path(12), a.0)).unwrap();
        assert!(c.psd && c.min_eig >= 0.0);
    }

    #[test]
    fn shrinkage_examples() {
        let g = make_graph(&GraphSpec::path(8)).unwrap();
        let p = make_psd_instance(&g, &CovVector::geometric(0.8, 7)).unwrap();
        assert_eq!(p.gamma(), 1.0);

        let g = make_graph(&GraphSpec::complete(4)).unwrap();
        let p = make_psd_instance(&g, &CovVector(vec![1.0, 0.5])).unwrap();
        assert_eq!(p.gamma(), 1.0);

        let p = make_psd_instance(&g, &CovVector(vec![1.0, -0.5])).unwrap();
        assert_eq!(p.gamma_steps, 682);
        assert!(validate_psd(&p.instance).unwrap().psd);

        assert!(make_psd_instance(&g, &CovVector(vec![0.0, 0.5])).is_err());
    }

    #[test]
    fn stable_rank_examples() {
        let inst = instance(GraphSpec::complete(5), vec![1.0, 0.0]);
        assert!((stable_rank(&inst).unwrap() - 5.0).abs() < 1e-12);

        // diag(1, 0.1, 0.1) has no graph realization with distinct diagonal,
        // so check the ratio on the matrix directly
        let m = SymMatrix::from_diag(&[1.0, 0.1, 0.1]);
        let r = linalg::trace(&m) / linalg::spectral_norm(&m).unwrap();
        assert!((r - 1.2).abs() < 1e-12);

        let inst = instance(GraphSpec::complete(64), vec![1.0, 0.5]);
        assert!((stable_rank(&inst).unwrap() - 64.0 / 32.5).abs() < 1e-9);

        let zero = instance(GraphSpec::path(3), vec![0.0, 0.0, 0.0]);
        assert!(stable_rank(&zero).is_err());
    }

    #[test]
    fn star_block_examples() {
        let a = vec![1.0, 0.5, 0.25, 0.125, 0.0625];
        let inst = instance(GraphSpec::star(2, 2), a.clone());
        let blocks = star_blocks(&inst).unwrap();
        assert_eq!(&star_assemble(&blocks, 2), inst.sigma());
        let want3 = SymMatrix::from_rows(&[vec![a[2], a[3]], vec![a[3], a[4]]]).unwrap();
        assert_eq!(blocks.sigma3, want3);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(blocks.sigma1.get(i, j), a[i.abs_diff(j)]);
            }
        }
        assert!(star_blocks(&instance(GraphSpec::path(3), vec![1.0, 0.5, 0.2])).is_err());
    }

    #[test]
    fn star_assembly_grid() {
        for branches in [2, 3, 5] {
            for depth in [1, 4, 10] {
                let a: Vec<f64> = (0..=2 * depth).map(|s| 1.0 / (1.0 + s as f64)).collect();
                let inst = instance(GraphSpec::star(branches, depth), a.clone());
                let b = star_blocks(&inst).unwrap();
                assert_eq!(&star_assemble(&b, branches), inst.sigma());
                for p in 0..depth {
                    assert_eq!(b.sigma4[p], a[p + 1]);
                    for q in 0..depth {
                        assert_eq!(b.sigma2.get(p, q), a[p.abs_diff(q)]);
                        assert_eq!(b.sigma3.get(p, q), a[p + q + 2]);
                    }
                }
            }
        }
    }

    #[test]
    fn path_covariance_is_toeplitz() {
        let inst = instance(GraphSpec::path(9), CovVector::geometric(0.7, 8).0);
        let s = inst.sigma();
        for i in 1..9 {
            for j in 1..9 {
                assert_eq!(s.get(i, j), s.get(i - 1, j - 1));
            }
        }
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = instance(GraphSpec::cycle(5), vec![1.0, 0.1 + 0.2, 1.0 / 3.0]);
        let s = serde_json::to_string(&inst).unwrap();
        assert!(s.starts_with(r#"{"graph":{"kind":"cycle","d":5},"a":["#));
        let back: SpCovInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn entries_read_back(d in 1usize..30, seed in any::<u64>(), kind in 0u8..3) {
            use rand::{Rng, SeedableRng};
            let spec = match kind {
                0 => GraphSpec::path(d),
                1 => GraphSpec::cycle(d + 2),
                _ => GraphSpec::grid(1 + d % 5, 1 + d / 5),
            };
            let g = make_graph(&spec).unwrap();
            let t = all_pairs_shortest_paths(&g).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..=t.diameter()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let inst = graph_cov(&g, &t, CovVector(a.clone())).unwrap();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    prop_assert_eq!(inst.sigma().get(i, j), a[t.dist(i, j)]);
                }
            }
        }

        #[test]
        fn shrinkage_is_maximal(d in 2usize..16, c in -1.0f64..1.0, a in 0.0f64..1.0) {
            let g = make_graph(&GraphSpec::cycle(d + 1)).unwrap();
            let t = all_pairs_shortest_paths(&g).unwrap();
            let base = CovVector((0..=t.diameter()).map(|s| if s == 0 { 1.0 } else { c * a.powi(s as i32) }).collect());
            let p = make_psd_instance(&g, &base).unwrap();
            prop_assert!(validate_psd(&p.instance).unwrap().psd);
            if p.gamma_steps < SHRINK_GRID {
                let next = assemble(&t, &shrink(&base, p.gamma_steps + 1)).unwrap();
                prop_assert!(!check_psd(&next).unwrap().psd);
            }
        }

        #[test]
        fn stable_rank_in_range(d in 1usize..25, rho in 0.0f64..0.95) {
            let inst = instance(GraphSpec::path(d), CovVector::geometric(rho, d - 1).0);
            let r = stable_rank(&inst).unwrap();
            prop_assert!(r >= 1.0 - 1e-12 && r <= d as f64 + 1e-12);
        }
    }
}
