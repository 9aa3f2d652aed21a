//! Brute-force enumeration of perfect matchings, the reference every exact
//! formula is checked against.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::graph::BipartiteGraph;

/// Enumerates all perfect matchings of a bipartite graph given by an edge
/// list `(white, black)`. Each matching lists one edge id per white vertex,
/// in white order. Whites are processed in index order.
pub fn enumerate_matchings(nw: usize, nb: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    if nw != nb {
        return Vec::new();
    }
    let mut adj = vec![Vec::new(); nw];
    for (i, &(w, b)) in edges.iter().enumerate() {
        adj[w].push((i, b));
    }
    let first: Vec<(usize, usize)> = adj.first().cloned().unwrap_or_default();
    if nw == 0 {
        return vec![Vec::new()];
    }
    first
        .par_iter()
        .flat_map_iter(|&(e, b)| {
            let mut used = vec![false; nb];
            used[b] = true;
            let mut cur = vec![e];
            let mut out = Vec::new();
            extend(&adj, 1, &mut used, &mut cur, &mut out);
            out
        })
        .collect()
}

fn extend(
    adj: &[Vec<(usize, usize)>],
    w: usize,
    used: &mut [bool],
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if w == adj.len() {
        out.push(cur.clone());
        return;
    }
    for &(e, b) in &adj[w] {
        if !used[b] {
            used[b] = true;
            cur.push(e);
            extend(adj, w + 1, used, cur, out);
            cur.pop();
            used[b] = false;
        }
    }
}

pub fn graph_matchings(g: &BipartiteGraph) -> Vec<Vec<usize>> {
    let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.white, e.black)).collect();
    enumerate_matchings(g.nw(), g.nb(), &edges)
}

pub fn matching_weight(g: &BipartiteGraph, m: &[usize]) -> BigRational {
    m.iter().fold(BigRational::one(), |acc, &e| acc * &g.edges[e].weight)
}

/// Weighted sum over all perfect matchings.
pub fn brute_partition(g: &BipartiteGraph) -> BigRational {
    graph_matchings(g).iter().map(|m| matching_weight(g, m)).sum()
}

/// For each edge, the weighted fraction of matchings that use it.
pub fn brute_edge_probabilities(g: &BipartiteGraph) -> Option<Vec<BigRational>> {
    let ms = graph_matchings(g);
    let mut acc = vec![BigRational::zero(); g.edges.len()];
    let mut z = BigRational::zero();
    for m in &ms {
        let w = matching_weight(g, m);
        for &e in m {
            acc[e] += &w;
        }
        z += w;
    }
    if z.is_zero() {
        return None;
    }
    Some(acc.into_iter().map(|a| a / &z).collect())
}
