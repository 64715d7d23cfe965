//! Regular digraphs, simple regular graphs, the bipartite double cover used
//! to count cycle-factors, and cycle-factors themselves.
//!
//! Vertices are `0..n`. Adjacency lists are kept sorted so that structural
//! equality is graph equality.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("degree must satisfy 1 <= d <= n (got n={n}, d={d})")]
    InvalidDegree { n: usize, d: usize },
    #[error("vertex {vertex} has degree {found}, expected {expected}")]
    DegreeMismatch {
        vertex: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} lists neighbour {neighbour} outside 0..{n}")]
    IndexOutOfRange {
        vertex: usize,
        neighbour: usize,
        n: usize,
    },
    #[error("edge {0} - {1} is not listed by both endpoints")]
    Asymmetric(usize, usize),
    #[error("loop at vertex {0} in an undirected graph")]
    Loop(usize),
    #[error("expected {expected} adjacency rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("sigma is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("sigma maps {0} to {1}, which is not an edge")]
    NotAnEdge(usize, usize),
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error("rejection sampling failed after {0} attempts")]
    RetryLimitExceeded(usize),
}

/// Checks the regular-digraph invariants on raw adjacency data and reports
/// the first violation found.
///
/// Rows are scanned in vertex order; an in-degree overflow is reported as soon
/// as it is seen, in-degree deficits only after the full scan.
pub fn validate_digraph(n: usize, d: usize, out_adj: &[Vec<usize>]) -> Result<(), GraphError> {
    if d == 0 || d > n {
        return Err(GraphError::InvalidDegree { n, d });
    }
    if out_adj.len() != n {
        return Err(GraphError::RowCount {
            expected: n,
            found: out_adj.len(),
        });
    }
    let mut seen = vec![usize::MAX; n];
    let mut in_deg = vec![0usize; n];
    for (u, row) in out_adj.iter().enumerate() {
        if row.len() != d {
            return Err(GraphError::DegreeMismatch {
                vertex: u,
                found: row.len(),
                expected: d,
            });
        }
        for &v in row {
            if v >= n {
                return Err(GraphError::IndexOutOfRange {
                    vertex: u,
                    neighbour: v,
                    n,
                });
            }
            if seen[v] == u {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            seen[v] = u;
            in_deg[v] += 1;
            if in_deg[v] > d {
                return Err(GraphError::DegreeMismatch {
                    vertex: v,
                    found: in_deg[v],
                    expected: d,
                });
            }
        }
    }
    for (v, &found) in in_deg.iter().enumerate() {
        if found != d {
            return Err(GraphError::DegreeMismatch {
                vertex: v,
                found,
                expected: d,
            });
        }
    }
    Ok(())
}

/// A directed graph in which every vertex has in- and out-degree exactly `d`.
/// Loops and digons are allowed, parallel arcs are not.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegularDigraph {
    n: usize,
    d: usize,
    out_adj: Vec<Vec<usize>>,
}

impl RegularDigraph {
    pub fn new(n: usize, d: usize, mut out_adj: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        validate_digraph(n, d, &out_adj)?;
        for row in &mut out_adj {
            row.sort_unstable();
        }
        Ok(Self { n, d, out_adj })
    }

    /// Builds the digraph whose arcs are `i -> perms[k][i]` for every `k`.
    pub fn from_permutations(n: usize, perms: &[Vec<usize>]) -> Result<Self, GraphError> {
        let out_adj = (0..n)
            .map(|i| perms.iter().map(|p| p[i]).collect())
            .collect();
        Self::new(n, perms.len(), out_adj)
    }

    /// The complete digraph on `n` vertices with a loop at every vertex.
    pub fn complete_with_loops(n: usize) -> Self {
        Self {
            n,
            d: n,
            out_adj: (0..n).map(|_| (0..n).collect()).collect(),
        }
    }

    /// The directed cycle `0 -> 1 -> ... -> n-1 -> 0` (a single loop when `n = 1`).
    pub fn directed_cycle(n: usize) -> Self {
        Self {
            n,
            d: 1,
            out_adj: (0..n).map(|i| vec![(i + 1) % n]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn out_neighbours(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn out_adj(&self) -> &[Vec<usize>] {
        &self.out_adj
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].binary_search(&v).is_ok()
    }

    pub fn has_loops(&self) -> bool {
        (0..self.n).any(|v| self.has_arc(v, v))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&v| (u, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut in_adj = vec![Vec::with_capacity(self.d); self.n];
        for (u, v) in self.arcs() {
            in_adj[v].push(u);
        }
        // arcs() visits sources in increasing order, so rows are already sorted
        Self {
            n: self.n,
            d: self.d,
            out_adj: in_adj,
        }
    }

    /// The bipartite graph with an edge `u ∈ U` to `v ∈ V` per arc `u -> v`.
    /// Its perfect matchings are exactly the cycle-factors of `self`.
    pub fn to_bipartite(&self) -> BipartiteGraph {
        BipartiteGraph {
            n: self.n,
            d: self.d,
            adj: self.out_adj.clone(),
        }
    }

    /// Weakly connected components, each listed in increasing vertex order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let t = self.transpose();
        components_of(self.n, |v| {
            self.out_adj[v]
                .iter()
                .chain(t.out_adj[v].iter())
                .copied()
                .collect()
        })
    }
}

/// A simple undirected `d`-regular graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UndirectedRegularGraph {
    n: usize,
    d: usize,
    adj: Vec<Vec<usize>>,
}

impl UndirectedRegularGraph {
    pub fn new(n: usize, d: usize, mut adj: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        if d == 0 || d >= n.max(1) {
            return Err(GraphError::InvalidDegree { n, d });
        }
        if adj.len() != n {
            return Err(GraphError::RowCount {
                expected: n,
                found: adj.len(),
            });
        }
        for (u, row) in adj.iter_mut().enumerate() {
            if row.len() != d {
                return Err(GraphError::DegreeMismatch {
                    vertex: u,
                    found: row.len(),
                    expected: d,
                });
            }
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge(u, w[0]));
                }
            }
            for &v in row.iter() {
                if v >= n {
                    return Err(GraphError::IndexOutOfRange {
                        vertex: u,
                        neighbour: v,
                        n,
                    });
                }
                if v == u {
                    return Err(GraphError::Loop(u));
                }
            }
        }
        for u in 0..n {
            for &v in &adj[u] {
                if adj[v].binary_search(&u).is_err() {
                    return Err(GraphError::Asymmetric(u, v));
                }
            }
        }
        Ok(Self { n, d, adj })
    }

    /// Builds a graph from an edge list, checking regularity and simplicity.
    pub fn from_edges(n: usize, d: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::IndexOutOfRange {
                    vertex: u,
                    neighbour: v,
                    n,
                });
            }
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        Self::new(n, d, adj)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adj(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Replaces every edge by the two opposite arcs.
    pub fn double(&self) -> RegularDigraph {
        RegularDigraph {
            n: self.n,
            d: self.d,
            out_adj: self.adj.clone(),
        }
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        components_of(self.n, |v| self.adj[v].clone())
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// Free-function form of [`UndirectedRegularGraph::double`].
pub fn double_undirected(g: &UndirectedRegularGraph) -> RegularDigraph {
    g.double()
}

fn components_of(n: usize, neighbours: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for v in neighbours(u) {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// A `d`-regular bipartite graph on `U ∪ V`, both sides indexed `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteGraph {
    n: usize,
    d: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(n: usize, d: usize, adj: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        // The side-to-side degree conditions are exactly the digraph ones.
        let g = RegularDigraph::new(n, d, adj)?;
        Ok(g.to_bipartite())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// V-side neighbours of the U-side vertex `u`.
    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Row `u` of the biadjacency matrix as a bit mask. Requires `n <= 64`.
    pub fn row_masks(&self) -> Vec<u64> {
        assert!(self.n <= 64, "row masks need n <= 64");
        self.adj
            .iter()
            .map(|row| row.iter().fold(0u64, |m, &v| m | (1 << v)))
            .collect()
    }

    /// Reads a perfect matching (U-side partner array) as a permutation.
    pub fn matching_as_permutation(&self, partner: &[usize]) -> Option<Vec<usize>> {
        if partner.len() != self.n {
            return None;
        }
        let mut used = vec![false; self.n];
        for (u, &v) in partner.iter().enumerate() {
            if v >= self.n || used[v] || !self.has_edge(u, v) {
                return None;
            }
            used[v] = true;
        }
        Some(partner.to_vec())
    }
}

/// A permutation `sigma` with every `(i, sigma[i])` an arc, together with its
/// cycle decomposition.
///
/// Cycles start at their smallest vertex and are ordered by it, so two equal
/// permutations always carry equal decompositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleFactor {
    sigma: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl CycleFactor {
    /// Checks bijectivity and arc membership against `g`.
    pub fn new(g: &RegularDigraph, sigma: Vec<usize>) -> Result<Self, GraphError> {
        let n = g.n();
        if sigma.len() != n {
            return Err(GraphError::NotAPermutation(n));
        }
        let mut hit = vec![false; n];
        for (i, &j) in sigma.iter().enumerate() {
            if j >= n || hit[j] {
                return Err(GraphError::NotAPermutation(n));
            }
            hit[j] = true;
            if !g.has_arc(i, j) {
                return Err(GraphError::NotAnEdge(i, j));
            }
        }
        Ok(Self::from_permutation_unchecked(sigma))
    }

    pub(crate) fn from_permutation_unchecked(sigma: Vec<usize>) -> Self {
        let cycles = cycle_decomposition(&sigma);
        Self { sigma, cycles }
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// Number of cycles, loops included as 1-cycles.
    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    pub fn into_sigma(self) -> Vec<usize> {
        self.sigma
    }
}

/// Cycles of a permutation, each starting at its minimum, sorted by minimum.
pub fn cycle_decomposition(sigma: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; sigma.len()];
    let mut cycles = Vec::new();
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = sigma[v];
        }
        cycles.push(cycle);
    }
    cycles
}

/// Number of cycles of a permutation without materialising them.
pub fn count_cycles(sigma: &[usize]) -> usize {
    let mut seen = vec![false; sigma.len()];
    let mut count = 0;
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            v = sigma[v];
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_loop_is_smallest_digraph() {
        assert!(validate_digraph(1, 1, &[vec![0]]).is_ok());
    }

    #[test]
    fn in_degree_mismatch_reported() {
        let err = validate_digraph(2, 1, &[vec![1], vec![1]]).unwrap_err();
        assert_eq!(
            err,
            GraphError::DegreeMismatch {
                vertex: 1,
                found: 2,
                expected: 1
            }
        );
    }

    #[test]
    fn complete_with_loops_valid() {
        let g = RegularDigraph::complete_with_loops(3);
        assert!(validate_digraph(3, 3, g.out_adj()).is_ok());
    }

    #[test]
    fn duplicate_and_range_errors() {
        assert_eq!(
            validate_digraph(2, 2, &[vec![1, 1], vec![0, 1]]).unwrap_err(),
            GraphError::DuplicateEdge(0, 1)
        );
        assert!(matches!(
            validate_digraph(2, 1, &[vec![2], vec![0]]).unwrap_err(),
            GraphError::IndexOutOfRange { .. }
        ));
        assert!(matches!(
            validate_digraph(2, 3, &[vec![0], vec![1]]).unwrap_err(),
            GraphError::InvalidDegree { .. }
        ));
    }

    #[test]
    fn transpose_is_regular() {
        let g = RegularDigraph::new(4, 2, vec![vec![1, 2], vec![2, 3], vec![3, 0], vec![0, 1]])
            .unwrap();
        let t = g.transpose();
        assert!(validate_digraph(4, 2, t.out_adj()).is_ok());
        assert_eq!(t.transpose(), g);
    }

    #[test]
    fn bipartite_of_small_digraphs() {
        let b = RegularDigraph::new(1, 1, vec![vec![0]])
            .unwrap()
            .to_bipartite();
        assert_eq!((b.n(), b.edge_count()), (1, 1));

        let k33 = RegularDigraph::complete_with_loops(3).to_bipartite();
        assert_eq!(k33.edge_count(), 9);

        let c3 = RegularDigraph::directed_cycle(3).to_bipartite();
        let edges: Vec<_> = (0..3)
            .flat_map(|u| c3.neighbours(u).iter().map(move |&v| (u, v)))
            .collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn doubling() {
        let c4 =
            UndirectedRegularGraph::from_edges(4, 2, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let dc4 = double_undirected(&c4);
        assert_eq!(dc4.arcs().count(), 8);
        assert!(!dc4.has_loops());
        for (u, v) in dc4.arcs() {
            assert!(dc4.has_arc(v, u));
        }
    }

    #[test]
    fn undirected_rejects_asymmetry_and_loops() {
        assert_eq!(
            UndirectedRegularGraph::new(3, 1, vec![vec![1], vec![2], vec![0]]).unwrap_err(),
            GraphError::Asymmetric(0, 1)
        );
        assert_eq!(
            UndirectedRegularGraph::new(3, 1, vec![vec![0], vec![2], vec![1]]).unwrap_err(),
            GraphError::Loop(0)
        );
    }

    #[test]
    fn cycle_factor_checks() {
        let g = RegularDigraph::complete_with_loops(4);
        let cf = CycleFactor::new(&g, vec![1, 0, 2, 3]).unwrap();
        assert_eq!(cf.cycles(), &[vec![0, 1], vec![2], vec![3]]);
        assert_eq!(cf.cycle_count(), 3);
        assert!(CycleFactor::new(&g, vec![1, 1, 2, 3]).is_err());

        let c = RegularDigraph::directed_cycle(4);
        assert_eq!(
            CycleFactor::new(&c, vec![0, 2, 3, 1]).unwrap_err(),
            GraphError::NotAnEdge(0, 0)
        );
    }

    #[test]
    fn components_of_blocks() {
        let g = RegularDigraph::new(4, 1, vec![vec![1], vec![0], vec![3], vec![2]]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1], vec![2, 3]]);
    }
}
