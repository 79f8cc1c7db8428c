//! Unweighted graphs, BFS distance tables, diameter paths and graph rulers.
//!
//! Node numbering per family is fixed:
//!
//! - path / cycle / complete: `0..d` in order.
//! - star(l, Δ): center `0`, then branch-major, nearest-to-center first, so
//!   depth `k` (1-based) of branch `b` (0-based) is node `1 + b·Δ + (k − 1)`.
//! - grid(rows, cols): `r·cols + c`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ruler::Ruler;

/// JSON description of a graph. `d` is optional for star and grid on input
/// and always present on output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Path {
        d: usize,
    },
    Cycle {
        d: usize,
    },
    Star {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        branches: usize,
        depth: usize,
    },
    Grid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        rows: usize,
        cols: usize,
    },
    Complete {
        d: usize,
    },
    Edges {
        d: usize,
        edges: Vec<[usize; 2]>,
    },
}

impl GraphSpec {
    pub fn path(d: usize) -> Self {
        Self::Path { d }
    }

    pub fn cycle(d: usize) -> Self {
        Self::Cycle { d }
    }

    pub fn star(branches: usize, depth: usize) -> Self {
        Self::Star {
            d: None,
            branches,
            depth,
        }
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        Self::Grid {
            d: None,
            rows,
            cols,
        }
    }

    pub fn complete(d: usize) -> Self {
        Self::Complete { d }
    }

    pub fn edges(d: usize, edges: Vec<[usize; 2]>) -> Self {
        Self::Edges { d, edges }
    }
}

/// Connected simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct Graph {
    spec: GraphSpec,
    adjacency: Vec<Vec<usize>>,
}

impl TryFrom<GraphSpec> for Graph {
    type Error = Error;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        make_graph(&spec)
    }
}

impl From<Graph> for GraphSpec {
    fn from(g: Graph) -> Self {
        g.spec
    }
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Normalized spec; `d` is always filled in.
    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    /// `(branches, depth)` when this graph was built as a star.
    pub fn star_shape(&self) -> Option<(usize, usize)> {
        match self.spec {
            GraphSpec::Star {
                branches, depth, ..
            } => Some((branches, depth)),
            _ => None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidGraph(msg.into())
}

pub fn make_graph(spec: &GraphSpec) -> Result<Graph> {
    let (d, edges, spec) = match *spec {
        GraphSpec::Path { d } => {
            if d < 1 {
                return Err(invalid("path needs d >= 1"));
            }
            let edges = (1..d).map(|i| [i - 1, i]).collect();
            (d, edges, GraphSpec::Path { d })
        }
        GraphSpec::Cycle { d } => {
            if d < 3 {
                return Err(invalid("cycle needs d >= 3"));
            }
            let mut edges: Vec<[usize; 2]> = (1..d).map(|i| [i - 1, i]).collect();
            edges.push([d - 1, 0]);
            (d, edges, GraphSpec::Cycle { d })
        }
        GraphSpec::Star { d, branches, depth } => {
            if branches < 2 || depth < 1 {
                return Err(invalid("star needs branches >= 2 and depth >= 1"));
            }
            let n = branches * depth + 1;
            check_declared(d, n)?;
            let mut edges = Vec::with_capacity(n - 1);
            for b in 0..branches {
                let first = 1 + b * depth;
                edges.push([0, first]);
                for k in 1..depth {
                    edges.push([first + k - 1, first + k]);
                }
            }
            (
                n,
                edges,
                GraphSpec::Star {
                    d: Some(n),
                    branches,
                    depth,
                },
            )
        }
        GraphSpec::Grid { d, rows, cols } => {
            if rows < 1 || cols < 1 {
                return Err(invalid("grid needs rows >= 1 and cols >= 1"));
            }
            let n = rows * cols;
            check_declared(d, n)?;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let v = r * cols + c;
                    if c + 1 < cols {
                        edges.push([v, v + 1]);
                    }
                    if r + 1 < rows {
                        edges.push([v, v + cols]);
                    }
                }
            }
            (
                n,
                edges,
                GraphSpec::Grid {
                    d: Some(n),
                    rows,
                    cols,
                },
            )
        }
        GraphSpec::Complete { d } => {
            if d < 1 {
                return Err(invalid("complete graph needs d >= 1"));
            }
            let mut edges = Vec::new();
            for i in 0..d {
                for j in (i + 1)..d {
                    edges.push([i, j]);
                }
            }
            (d, edges, GraphSpec::Complete { d })
        }
        GraphSpec::Edges { d, ref edges } => {
            if d < 1 {
                return Err(invalid("edge-list graph needs d >= 1"));
            }
            (d, edges.clone(), spec.clone())
        }
    };
    let adjacency = build_adjacency(d, &edges)?;
    if !is_connected(&adjacency) {
        return Err(Error::Disconnected);
    }
    Ok(Graph { spec, adjacency })
}

fn check_declared(declared: Option<usize>, actual: usize) -> Result<()> {
    match declared {
        Some(d) if d != actual => Err(invalid(format!(
            "declared d = {d} but the family has {actual} nodes"
        ))),
        _ => Ok(()),
    }
}

fn build_adjacency(d: usize, edges: &[[usize; 2]]) -> Result<Vec<Vec<usize>>> {
    let mut adj = vec![Vec::new(); d];
    for &[i, j] in edges {
        if i >= d || j >= d {
            return Err(invalid(format!("edge ({i},{j}) out of range for d = {d}")));
        }
        if i == j {
            return Err(invalid(format!("self-loop at node {i}")));
        }
        adj[i].push(j);
        adj[j].push(i);
    }
    for (v, list) in adj.iter_mut().enumerate() {
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate edge at node {v}")));
        }
    }
    Ok(adj)
}

fn is_connected(adj: &[Vec<usize>]) -> bool {
    bfs(adj, 0).iter().all(|&x| x != UNREACHED)
}

const UNREACHED: u32 = u32::MAX;

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHED; adj.len()];
    if adj.is_empty() {
        return dist;
    }
    let mut queue = VecDeque::with_capacity(adj.len());
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in &adj[u] {
            if dist[w] == UNREACHED {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs hop counts plus the diameter and its lowest-index endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<u32>,
    diameter: usize,
    endpoints: (usize, usize),
}

impl DistanceTable {
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.n + j] as usize
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn diameter_endpoints(&self) -> (usize, usize) {
        self.endpoints
    }
}

/// BFS from every node (in parallel; rows are collected in source order).
pub fn all_pairs_shortest_paths(g: &Graph) -> Result<DistanceTable> {
    let n = g.node_count();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|s| bfs(&g.adjacency, s))
        .collect();
    let mut dist = Vec::with_capacity(n * n);
    for row in rows {
        if row.contains(&UNREACHED) {
            return Err(Error::Disconnected);
        }
        dist.extend(row);
    }
    let mut diameter = 0;
    let mut endpoints = (0, 0);
    for u in 0..n {
        for v in (u + 1)..n {
            let duv = dist[u * n + v] as usize;
            if duv > diameter {
                diameter = duv;
                endpoints = (u, v);
            }
        }
    }
    Ok(DistanceTable {
        n,
        dist,
        diameter,
        endpoints,
    })
}

/// Shortest path `v_0..v_D` between the stored diameter endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiameterPath {
    pub nodes: Vec<usize>,
}

/// Walks back from the far endpoint, always stepping to the lowest-index
/// neighbor one hop closer to the near endpoint.
pub fn diameter_path(g: &Graph, t: &DistanceTable) -> DiameterPath {
    let (u, v) = t.endpoints;
    let mut nodes = vec![v];
    let mut cur = v;
    while cur != u {
        let want = t.dist(u, cur) - 1;
        cur = *g
            .neighbors(cur)
            .iter()
            .find(|&&w| t.dist(u, w) == want)
            .expect("BFS distances admit a parent");
        nodes.push(cur);
    }
    nodes.reverse();
    DiameterPath { nodes }
}

/// Ruler nodes placed along a diameter path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphRuler {
    pub nodes: Vec<usize>,
    pub positions: Vec<usize>,
    #[serde(rename = "D")]
    pub diameter: usize,
}

impl GraphRuler {
    /// Entry sample complexity: entries read per sample.
    pub fn esc(&self) -> usize {
        self.nodes.len()
    }

    /// The set of pairwise distances between ruler nodes, as a coverage mask.
    pub fn covered_distances(&self, t: &DistanceTable) -> Vec<bool> {
        let mut seen = vec![false; t.diameter + 1];
        for &a in &self.nodes {
            for &b in &self.nodes {
                seen[t.dist(a, b)] = true;
            }
        }
        seen
    }
}

pub fn graph_sparse_ruler(g: &Graph, t: &DistanceTable, r: &Ruler) -> Result<GraphRuler> {
    if r.diameter() != t.diameter {
        return Err(Error::NotARuler(format!(
            "ruler is for D = {} but the graph diameter is {}",
            r.diameter(),
            t.diameter
        )));
    }
    let path = diameter_path(g, t);
    let gr = GraphRuler {
        nodes: r.marks().iter().map(|&p| path.nodes[p]).collect(),
        positions: r.marks().to_vec(),
        diameter: t.diameter,
    };
    if !gr.covered_distances(t).iter().all(|&b| b) {
        return Err(Error::NotARuler(
            "graph ruler nodes do not cover every distance".into(),
        ));
    }
    Ok(gr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ruler::ruler_prop31;
    use proptest::prelude::*;

    fn build(spec: GraphSpec) -> (Graph, DistanceTable) {
        let g = make_graph(&spec).unwrap();
        let t = all_pairs_shortest_paths(&g).unwrap();
        (g, t)
    }

    fn edge_set(g: &Graph) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..g.node_count() {
            for &j in g.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn family_examples() {
        let g = make_graph(&GraphSpec::path(4)).unwrap();
        assert_eq!(edge_set(&g), vec![(0, 1), (1, 2), (2, 3)]);

        let g = make_graph(&GraphSpec::star(3, 1)).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.neighbors(0), &[1, 2, 3]);

        let (g, t) = build(GraphSpec::grid(2, 2));
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(t.diameter(), 2);
    }

    #[test]
    fn bad_edge_lists() {
        let disconnected = GraphSpec::edges(4, vec![[0, 1], [2, 3]]);
        assert!(matches!(
            make_graph(&disconnected),
            Err(Error::Disconnected)
        ));
        let self_loop = GraphSpec::edges(2, vec![[0, 1], [1, 1]]);
        assert!(matches!(
            make_graph(&self_loop),
            Err(Error::InvalidGraph(_))
        ));
        let dup = GraphSpec::edges(2, vec![[0, 1], [1, 0]]);
        assert!(matches!(make_graph(&dup), Err(Error::InvalidGraph(_))));
        assert!(make_graph(&GraphSpec::star(1, 3)).is_err());
        assert!(make_graph(&GraphSpec::cycle(2)).is_err());
    }

    #[test]
    fn diameter_examples() {
        let (_, t) = build(GraphSpec::path(5));
        assert_eq!((t.diameter(), t.diameter_endpoints()), (4, (0, 4)));
        let (_, t) = build(GraphSpec::complete(7));
        assert_eq!(t.diameter(), 1);
        let (_, t) = build(GraphSpec::star(4, 3));
        assert_eq!(t.diameter(), 6);
    }

    #[test]
    fn diameter_path_examples() {
        let (g, t) = build(GraphSpec::path(5));
        assert_eq!(diameter_path(&g, &t).nodes, vec![0, 1, 2, 3, 4]);
        let (g, t) = build(GraphSpec::star(2, 2));
        assert_eq!(diameter_path(&g, &t).nodes, vec![2, 1, 0, 3, 4]);
        let (g, t) = build(GraphSpec::cycle(6));
        let p = diameter_path(&g, &t);
        assert_eq!(t.diameter(), 3);
        assert_eq!(p.nodes.len(), 4);
        assert_eq!(p.nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn graph_ruler_examples() {
        let (g, t) = build(GraphSpec::path(7));
        let r = Ruler::new(vec![0, 1, 4, 6], 6).unwrap();
        let gr = graph_sparse_ruler(&g, &t, &r).unwrap();
        assert_eq!(gr.nodes, vec![0, 1, 4, 6]);

        let (g, t) = build(GraphSpec::complete(5));
        let gr = graph_sparse_ruler(&g, &t, &Ruler::complete(1)).unwrap();
        assert_eq!(gr.nodes.len(), 2);

        let (g, t) = build(GraphSpec::star(2, 3));
        let r = ruler_prop31(6);
        assert_eq!(r.marks(), &[0, 1, 2, 3, 6]);
        let gr = graph_sparse_ruler(&g, &t, &r).unwrap();
        assert_eq!(gr.nodes.len(), 5);

        // wrong diameter
        assert!(graph_sparse_ruler(&g, &t, &ruler_prop31(5)).is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let g = make_graph(&GraphSpec::star(3, 2)).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"kind":"star","d":7,"branches":3,"depth":2}"#);
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad: std::result::Result<Graph, _> =
            serde_json::from_str(r#"{"kind":"star","d":8,"branches":3,"depth":2}"#);
        assert!(bad.is_err());
    }

    fn families() -> Vec<GraphSpec> {
        vec![
            GraphSpec::path(1),
            GraphSpec::path(2),
            GraphSpec::path(200),
            GraphSpec::cycle(3),
            GraphSpec::cycle(57),
            GraphSpec::cycle(200),
            GraphSpec::star(2, 1),
            GraphSpec::star(5, 13),
            GraphSpec::star(3, 66),
            GraphSpec::grid(1, 9),
            GraphSpec::grid(7, 11),
            GraphSpec::grid(14, 14),
            GraphSpec::complete(1),
            GraphSpec::complete(60),
        ]
    }

    #[test]
    fn diameter_paths_are_geodesic() {
        for spec in families() {
            let (g, t) = build(spec.clone());
            let p = diameter_path(&g, &t);
            assert_eq!(p.nodes.len(), t.diameter() + 1, "{spec:?}");
            for (i, &a) in p.nodes.iter().enumerate() {
                for (j, &b) in p.nodes.iter().enumerate() {
                    assert_eq!(t.dist(a, b), i.abs_diff(j), "{spec:?}");
                }
            }
        }
    }

    #[test]
    fn graph_rulers_cover_exactly() {
        for spec in families() {
            let (g, t) = build(spec.clone());
            let gr = graph_sparse_ruler(&g, &t, &ruler_prop31(t.diameter())).unwrap();
            let mut ds: Vec<usize> = gr
                .nodes
                .iter()
                .flat_map(|&a| gr.nodes.iter().map(move |&b| (a, b)))
                .map(|(a, b)| t.dist(a, b))
                .collect();
            ds.sort_unstable();
            ds.dedup();
            assert_eq!(ds, (0..=t.diameter()).collect::<Vec<_>>(), "{spec:?}");
        }
    }

    #[test]
    fn tables_are_metrics() {
        for spec in families() {
            let (g, t) = build(spec);
            let n = g.node_count();
            for i in 0..n {
                assert_eq!(t.dist(i, i), 0);
                for j in 0..n {
                    assert_eq!(t.dist(i, j), t.dist(j, i));
                    if n <= 80 {
                        for k in 0..n {
                            assert!(t.dist(i, k) <= t.dist(i, j) + t.dist(j, k));
                        }
                    }
                }
            }
        }
    }

    fn floyd_warshall(n: usize, edges: &[[usize; 2]]) -> Vec<usize> {
        let inf = usize::MAX / 4;
        let mut d = vec![inf; n * n];
        for i in 0..n {
            d[i * n + i] = 0;
        }
        for &[a, b] in edges {
            d[a * n + b] = 1;
            d[b * n + a] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i * n + k] + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                    }
                }
            }
        }
        d
    }

    fn connected_edges() -> impl Strategy<Value = (usize, Vec<[usize; 2]>)> {
        (1usize..=40).prop_flat_map(|n| {
            let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n), 0..(2 * n));
            (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
                let mut set = std::collections::BTreeSet::new();
                for (v, p) in parents.iter().enumerate() {
                    let child = v + 1;
                    set.insert((p.index(child), child));
                }
                for (a, b) in extra {
                    if a != b {
                        set.insert((a.min(b), a.max(b)));
                    }
                }
                (n, set.into_iter().map(|(a, b)| [a, b]).collect())
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bfs_matches_floyd_warshall((n, edges) in connected_edges()) {
            let g = make_graph(&GraphSpec::edges(n, edges.clone())).unwrap();
            let t = all_pairs_shortest_paths(&g).unwrap();
            let fw = floyd_warshall(n, &edges);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(t.dist(i, j), fw[i * n + j]);
                }
            }
            prop_assert_eq!(t.diameter(), fw.iter().copied().max().unwrap());
            let (u, v) = t.diameter_endpoints();
            prop_assert_eq!(t.dist(u, v), t.diameter());
            let p = diameter_path(&g, &t);
            for w in p.nodes.windows(2) {
                prop_assert!(g.neighbors(w[0]).contains(&w[1]));
            }
        }
    }
}
