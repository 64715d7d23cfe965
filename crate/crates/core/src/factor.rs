//! From cycle-factors to path-factors and tours, and checkers that re-validate
//! the results against the graph from scratch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CycleFactor, RegularDigraph, UndirectedRegularGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("cycle-factor uses a loop at vertex {0}")]
    LoopEncountered(usize),
    #[error("{0} - {1} is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("cycle-factor has {found} vertices, graph has {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("graph is disconnected ({components} components)")]
    GraphDisconnected { components: usize },
    #[error("cycles do not partition the vertex set")]
    NotAPartition,
}

/// Undirected cycles of a cycle-factor of the doubled graph. A cycle of two
/// vertices `[u, v]` stands for the single edge `u-v`.
pub fn to_undirected_cycle_factor(
    cf: &CycleFactor,
    g: &UndirectedRegularGraph,
) -> Result<Vec<Vec<usize>>, FactorError> {
    if cf.sigma().len() != g.n() {
        return Err(FactorError::SizeMismatch {
            expected: g.n(),
            found: cf.sigma().len(),
        });
    }
    for (i, &j) in cf.sigma().iter().enumerate() {
        if i == j {
            return Err(FactorError::LoopEncountered(i));
        }
        if !g.has_edge(i, j) {
            return Err(FactorError::NotAnEdge(i, j));
        }
    }
    Ok(cf.cycles().to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFactor {
    pub paths: Vec<Vec<usize>>,
}

impl PathFactor {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Drops one edge from every cycle: the cycle edge `{a, b}` with the largest
/// `(max(a, b), min(a, b))`. Two-vertex cycles keep their edge and
/// single vertices stay single-vertex paths.
pub fn to_path_factor(cycles: &[Vec<usize>]) -> PathFactor {
    let paths = cycles
        .iter()
        .map(|c| {
            let l = c.len();
            if l <= 2 {
                return c.clone();
            }
            let key = |k: usize| {
                let (a, b) = (c[k], c[(k + 1) % l]);
                (a.max(b), a.min(b))
            };
            let cut = (0..l).max_by_key(|&k| key(k)).unwrap();
            (1..=l).map(|s| c[(cut + s) % l]).collect()
        })
        .collect();
    PathFactor { paths }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub walk: Vec<usize>,
    pub length: usize,
}

/// Closed walk through every vertex built from a cycle decomposition.
///
/// Cycles are contracted to supernodes and a BFS spanning tree is grown from
/// the cycle holding vertex 0 (vertices in cycle order, neighbours in
/// increasing order). The walk goes around each cycle and, at the vertex
/// where a tree edge leaves, detours into the child cycle and back. Each cycle
/// of length `l` costs `l` steps (`0` for a lone vertex) and each tree edge
/// costs 2, so the length is at most `n + 2(c - 1)`.
pub fn to_tour(cycles: &[Vec<usize>], g: &UndirectedRegularGraph) -> Result<Tour, FactorError> {
    let n = g.n();
    let mut owner = vec![usize::MAX; n];
    for (ci, c) in cycles.iter().enumerate() {
        for &v in c {
            if v >= n || owner[v] != usize::MAX {
                return Err(FactorError::NotAPartition);
            }
            owner[v] = ci;
        }
    }
    if owner.contains(&usize::MAX) {
        return Err(FactorError::NotAPartition);
    }
    if n == 0 {
        return Ok(Tour {
            walk: Vec::new(),
            length: 0,
        });
    }
    for c in cycles {
        let l = c.len();
        if l >= 2 {
            for k in 0..l {
                let (a, b) = (c[k], c[(k + 1) % l]);
                if !g.has_edge(a, b) {
                    return Err(FactorError::NotAnEdge(a, b));
                }
            }
        }
    }

    let root = owner[0];
    // children[v] = (entry vertex, child cycle) detours taken at v
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut entry = vec![usize::MAX; cycles.len()];
    let mut seen = vec![false; cycles.len()];
    seen[root] = true;
    entry[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut reached = 1;
    while let Some(ci) = queue.pop_front() {
        let c = &cycles[ci];
        let start = c.iter().position(|&v| v == entry[ci]).unwrap();
        for s in 0..c.len() {
            let u = c[(start + s) % c.len()];
            for &w in g.neighbours(u) {
                let cw = owner[w];
                if !seen[cw] {
                    seen[cw] = true;
                    entry[cw] = w;
                    children[u].push((w, cw));
                    queue.push_back(cw);
                    reached += 1;
                }
            }
        }
    }
    if reached != cycles.len() {
        return Err(FactorError::GraphDisconnected {
            components: g.components().len(),
        });
    }

    let mut walk = Vec::with_capacity(n + 2 * cycles.len());
    walk_cycle(cycles, &owner, &children, 0, &mut walk);
    let length = walk.len() - 1;
    Ok(Tour { walk, length })
}

fn walk_cycle(
    cycles: &[Vec<usize>],
    owner: &[usize],
    children: &[Vec<(usize, usize)>],
    start: usize,
    walk: &mut Vec<usize>,
) {
    let c = &cycles[owner[start]];
    let pos = c.iter().position(|&v| v == start).unwrap();
    walk.push(start);
    for s in 0..c.len() {
        let u = c[(pos + s) % c.len()];
        if s > 0 {
            walk.push(u);
        }
        for &(w, _) in &children[u] {
            walk_cycle(cycles, owner, children, w, walk);
            walk.push(u);
        }
    }
    if c.len() > 1 {
        walk.push(start);
    }
}

/// A problem found by one of the checkers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyWalk,
    NotClosed { first: usize, last: usize },
    NonAdjacent { u: usize, v: usize },
    UncoveredVertex { v: usize },
    VertexReuse { v: usize },
    IndexOutOfRange { v: usize },
    LengthMismatch { declared: usize, actual: usize },
    EmptyPath { index: usize },
    NotAPermutation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_tour(t: &Tour, g: &UndirectedRegularGraph) -> Verdict {
    let n = g.n();
    let mut out = Vec::new();
    if t.walk.is_empty() {
        if n > 0 {
            out.push(Violation::EmptyWalk);
        }
        return Verdict { violations: out };
    }
    let (first, last) = (t.walk[0], t.walk[t.walk.len() - 1]);
    if first != last {
        out.push(Violation::NotClosed { first, last });
    }
    if t.length != t.walk.len() - 1 {
        out.push(Violation::LengthMismatch {
            declared: t.length,
            actual: t.walk.len() - 1,
        });
    }
    let mut covered = vec![false; n];
    for &v in &t.walk {
        if v >= n {
            out.push(Violation::IndexOutOfRange { v });
        } else {
            covered[v] = true;
        }
    }
    for w in t.walk.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            out.push(Violation::NonAdjacent { u: w[0], v: w[1] });
        }
    }
    out.extend(
        covered
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(v, _)| Violation::UncoveredVertex { v }),
    );
    Verdict { violations: out }
}

pub fn verify_path_factor(pf: &PathFactor, g: &UndirectedRegularGraph) -> Verdict {
    let n = g.n();
    let mut out = Vec::new();
    let mut seen = vec![false; n];
    for (index, p) in pf.paths.iter().enumerate() {
        if p.is_empty() {
            out.push(Violation::EmptyPath { index });
        }
        for &v in p {
            if v >= n {
                out.push(Violation::IndexOutOfRange { v });
            } else if seen[v] {
                out.push(Violation::VertexReuse { v });
            } else {
                seen[v] = true;
            }
        }
        for w in p.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                out.push(Violation::NonAdjacent { u: w[0], v: w[1] });
            }
        }
    }
    out.extend(
        seen.iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(v, _)| Violation::UncoveredVertex { v }),
    );
    Verdict { violations: out }
}

/// Re-checks a cycle-factor permutation against a digraph.
pub fn verify_cycle_factor(sigma: &[usize], g: &RegularDigraph) -> Verdict {
    let n = g.n();
    let mut out = Vec::new();
    if sigma.len() != n {
        out.push(Violation::NotAPermutation);
        return Verdict { violations: out };
    }
    let mut hit = vec![false; n];
    for (i, &j) in sigma.iter().enumerate() {
        if j >= n {
            out.push(Violation::IndexOutOfRange { v: j });
            continue;
        }
        if hit[j] {
            out.push(Violation::VertexReuse { v: j });
        }
        hit[j] = true;
        if !g.has_arc(i, j) {
            out.push(Violation::NonAdjacent { u: i, v: j });
        }
    }
    Verdict { violations: out }
}
