//! Test-family generators: random regular digraphs and undirected graphs, and
//! the extremal families (clique unions, complete digraphs with loops, ...).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, RegularDigraph, UndirectedRegularGraph};

/// Attempts allowed before a rejection sampler gives up.
pub const RETRY_LIMIT: usize = 10_000;

/// A graph of either orientation, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Graph {
    Directed(RegularDigraph),
    Undirected(UndirectedRegularGraph),
}

impl Graph {
    pub fn n(&self) -> usize {
        match self {
            Graph::Directed(g) => g.n(),
            Graph::Undirected(g) => g.n(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Graph::Directed(g) => g.d(),
            Graph::Undirected(g) => g.d(),
        }
    }

    /// The digraph whose cycle-factors are sampled: undirected graphs are
    /// doubled.
    pub fn as_digraph(&self) -> RegularDigraph {
        match self {
            Graph::Directed(g) => g.clone(),
            Graph::Undirected(g) => g.double(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Disjoint union of `n/d` complete digraphs with loops on `d` vertices.
    CompleteLoops,
    /// Disjoint union of `n/(d+1)` undirected cliques `K_{d+1}`.
    CliqueUnion,
    /// Undirected cycle `C_n` (`d = 2`).
    Cycle,
    /// Disjoint union of `n/(2d)` copies of `K_{d,d}`.
    CompleteBipartiteLike,
    /// Undirected `K_n` (`d = n - 1`).
    Complete,
    /// The Petersen graph (`n = 10`, `d = 3`).
    Petersen,
    /// Directed cycle on `n` vertices (`d = 1`).
    DirectedCycle,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::CompleteLoops,
        Family::CliqueUnion,
        Family::Cycle,
        Family::CompleteBipartiteLike,
        Family::Complete,
        Family::Petersen,
        Family::DirectedCycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CompleteLoops => "complete_loops",
            Family::CliqueUnion => "clique_union",
            Family::Cycle => "cycle",
            Family::CompleteBipartiteLike => "complete_bipartite_like",
            Family::Complete => "complete",
            Family::Petersen => "petersen",
            Family::DirectedCycle => "directed_cycle",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        let norm = name.replace('-', "_");
        Family::ALL.into_iter().find(|f| f.name() == norm)
    }
}

fn bad(msg: impl Into<String>) -> GraphError {
    GraphError::BadParameters(msg.into())
}

pub fn gen_family(kind: Family, n: usize, d: usize) -> Result<Graph, GraphError> {
    match kind {
        Family::CompleteLoops => {
            if d == 0 || !n.is_multiple_of(d) {
                return Err(bad(format!("complete_loops needs d | n (n={n}, d={d})")));
            }
            let out_adj = (0..n)
                .map(|v| {
                    let base = v / d * d;
                    (base..base + d).collect()
                })
                .collect();
            Ok(Graph::Directed(RegularDigraph::new(n, d, out_adj)?))
        }
        Family::CliqueUnion => {
            if !n.is_multiple_of(d + 1) {
                return Err(bad(format!("clique_union needs (d+1) | n (n={n}, d={d})")));
            }
            let adj = (0..n)
                .map(|v| {
                    let base = v / (d + 1) * (d + 1);
                    (base..base + d + 1).filter(|&w| w != v).collect()
                })
                .collect();
            Ok(Graph::Undirected(UndirectedRegularGraph::new(n, d, adj)?))
        }
        Family::Cycle => {
            if d != 2 || n < 3 {
                return Err(bad(format!("cycle needs d = 2 and n >= 3 (n={n}, d={d})")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Ok(Graph::Undirected(UndirectedRegularGraph::from_edges(
                n, 2, &edges,
            )?))
        }
        Family::CompleteBipartiteLike => {
            if d == 0 || !n.is_multiple_of(2 * d) {
                return Err(bad(format!(
                    "complete_bipartite_like needs 2d | n (n={n}, d={d})"
                )));
            }
            let adj = (0..n)
                .map(|v| {
                    let base = v / (2 * d) * (2 * d);
                    let other = if v - base < d { base + d } else { base };
                    (other..other + d).collect()
                })
                .collect();
            Ok(Graph::Undirected(UndirectedRegularGraph::new(n, d, adj)?))
        }
        Family::Complete => {
            if n < 2 || d != n - 1 {
                return Err(bad(format!("complete needs d = n - 1 (n={n}, d={d})")));
            }
            let adj = (0..n)
                .map(|v| (0..n).filter(|&w| w != v).collect())
                .collect();
            Ok(Graph::Undirected(UndirectedRegularGraph::new(n, d, adj)?))
        }
        Family::Petersen => {
            if n != 10 || d != 3 {
                return Err(bad("petersen has n = 10, d = 3"));
            }
            let mut edges = Vec::new();
            for i in 0..5 {
                edges.push((i, (i + 1) % 5));
                edges.push((i, i + 5));
                edges.push((5 + i, 5 + (i + 2) % 5));
            }
            Ok(Graph::Undirected(UndirectedRegularGraph::from_edges(
                10, 3, &edges,
            )?))
        }
        Family::DirectedCycle => {
            if d != 1 || n == 0 {
                return Err(bad(format!("directed_cycle needs d = 1 (n={n}, d={d})")));
            }
            Ok(Graph::Directed(RegularDigraph::directed_cycle(n)))
        }
    }
}

/// Random `d`-regular digraph as a union of `d` random permutations that
/// pairwise disagree at every index (so no arc is repeated).
///
/// Each permutation is resampled until it is compatible with the ones already
/// drawn. After [`RETRY_LIMIT`] rejected draws in total the generator falls
/// back to a randomly relabelled circulant built from `d` distinct shifts,
/// which always succeeds when the parameters are feasible.
pub fn gen_random_regular_digraph(
    n: usize,
    d: usize,
    seed: u64,
    allow_loops: bool,
) -> Result<RegularDigraph, GraphError> {
    if d == 0 || d > n {
        return Err(GraphError::InvalidDegree { n, d });
    }
    if !allow_loops && d == n {
        return Err(bad(format!("a loop-free {d}-regular digraph needs n > d")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match permutation_union(n, d, allow_loops, &mut rng) {
        Ok(g) => Ok(g),
        Err(GraphError::RetryLimitExceeded(_)) => circulant_digraph(n, d, allow_loops, &mut rng),
        Err(e) => Err(e),
    }
}

fn permutation_union(
    n: usize,
    d: usize,
    allow_loops: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RegularDigraph, GraphError> {
    // taken[i] holds the images of i already used by earlier permutations
    let mut taken: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(d);
    let mut attempts = 0usize;
    let mut p: Vec<usize> = (0..n).collect();
    while perms.len() < d {
        if attempts >= RETRY_LIMIT {
            return Err(GraphError::RetryLimitExceeded(attempts));
        }
        attempts += 1;
        p.shuffle(rng);
        let ok = (0..n).all(|i| (allow_loops || p[i] != i) && !taken[i].contains(&p[i]));
        if ok {
            for (i, &pi) in p.iter().enumerate() {
                taken[i].push(pi);
            }
            perms.push(p.clone());
        }
    }
    RegularDigraph::from_permutations(n, &perms)
}

fn circulant_digraph(
    n: usize,
    d: usize,
    allow_loops: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RegularDigraph, GraphError> {
    let first = if allow_loops { 0 } else { 1 };
    let mut shifts: Vec<usize> = (first..n).collect();
    shifts.shuffle(rng);
    shifts.truncate(d);
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let mut out_adj = vec![Vec::with_capacity(d); n];
    for i in 0..n {
        for &s in &shifts {
            out_adj[label[i]].push(label[(i + s) % n]);
        }
    }
    RegularDigraph::new(n, d, out_adj)
}

/// Random simple `d`-regular undirected graph.
///
/// Uses the pairing model with edge-by-edge rejection: pairs of free points
/// are drawn uniformly and only the offending pair is redrawn when it would
/// create a loop or a repeated edge. A stuck pairing restarts from scratch.
/// When [`RETRY_LIMIT`] restarts are used up, a relabelled circulant is
/// returned instead.
pub fn gen_random_regular_graph(
    n: usize,
    d: usize,
    seed: u64,
) -> Result<UndirectedRegularGraph, GraphError> {
    if d == 0 || d >= n {
        return Err(GraphError::InvalidDegree { n, d });
    }
    if !(n * d).is_multiple_of(2) {
        return Err(bad(format!("n*d must be even (n={n}, d={d})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RETRY_LIMIT {
        if let Some(edges) = try_pairing(n, d, &mut rng) {
            return UndirectedRegularGraph::from_edges(n, d, &edges);
        }
    }
    circulant_graph(n, d, &mut rng)
}

fn try_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut adj = vec![Vec::with_capacity(d); n];
    let mut edges = Vec::with_capacity(n * d / 2);
    while !points.is_empty() {
        let mut placed = false;
        // a bounded number of redraws per edge before declaring the pairing stuck
        for _ in 0..(4 * points.len()).max(64) {
            let a = rng.random_range(0..points.len());
            let b = rng.random_range(0..points.len());
            let (u, v) = (points[a], points[b]);
            if a == b || u == v || adj[u].contains(&v) {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
            edges.push((u.min(v), u.max(v)));
            let (hi, lo) = (a.max(b), a.min(b));
            points.swap_remove(hi);
            points.swap_remove(lo);
            placed = true;
            break;
        }
        if !placed {
            return None;
        }
    }
    Some(edges)
}

fn circulant_graph(
    n: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<UndirectedRegularGraph, GraphError> {
    // shifts ±1..±d/2, plus n/2 when d is odd (n is even in that case)
    let mut shifts: Vec<usize> = (1..=d / 2).flat_map(|s| [s, n - s]).collect();
    if d % 2 == 1 {
        shifts.push(n / 2);
    }
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let mut adj = vec![Vec::with_capacity(d); n];
    for i in 0..n {
        for &s in &shifts {
            adj[label[i]].push(label[(i + s) % n]);
        }
    }
    UndirectedRegularGraph::new(n, d, adj)
}
