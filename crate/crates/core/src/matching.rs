//! Hopcroft–Karp maximum matching on a [`BipartiteGraph`].

use std::collections::VecDeque;

use crate::graph::BipartiteGraph;

const NIL: usize = usize::MAX;

/// Maximum matching as a U-side partner array (`None` for unmatched).
///
/// Deterministic: BFS layers and DFS both follow sorted adjacency order.
pub fn hopcroft_karp(g: &BipartiteGraph) -> Vec<Option<usize>> {
    let n = g.n();
    let mut match_u = vec![NIL; n];
    let mut match_v = vec![NIL; n];
    let mut dist = vec![0usize; n];

    loop {
        // BFS from free U vertices
        let mut queue = VecDeque::new();
        for u in 0..n {
            if match_u[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbours(u) {
                let w = match_v[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n];
        for u in 0..n {
            if match_u[u] == NIL {
                augment(g, u, &mut match_u, &mut match_v, &mut dist, &mut it);
            }
        }
    }
    match_u
        .into_iter()
        .map(|v| (v != NIL).then_some(v))
        .collect()
}

fn augment(
    g: &BipartiteGraph,
    u: usize,
    match_u: &mut [usize],
    match_v: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    let adj = g.neighbours(u);
    while it[u] < adj.len() {
        let v = adj[it[u]];
        it[u] += 1;
        let w = match_v[v];
        if w == NIL || (dist[w] == dist[u] + 1 && augment(g, w, match_u, match_v, dist, it)) {
            match_u[u] = v;
            match_v[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Perfect matching as a permutation, or `None` if the maximum matching is
/// not perfect.
pub fn perfect_matching(g: &BipartiteGraph) -> Option<Vec<usize>> {
    hopcroft_karp(g).into_iter().collect()
}
