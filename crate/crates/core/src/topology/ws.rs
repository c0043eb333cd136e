use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;

use super::{ring_distance, KappaReport};

/// Undirected, unweighted Watts–Strogatz graph on a ring.
///
/// Edges are stored 0-based as `(low, high)` pairs in the order they were
/// produced by the rewiring pass; `neighbors` is a sorted adjacency view.
#[derive(Clone, Debug, PartialEq)]
pub struct WattsStrogatzGraph {
    n: usize,
    k: usize,
    p: f64,
    seed: u64,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    adjacency: Vec<u32>,
    rewired: usize,
}

/// Builds the k-nearest-neighbor ring and rewires it.
///
/// Pristine edges are visited lap by lap (`offset = 1..=k`, then node
/// `i = 0..n`). With probability `p` the clockwise endpoint of edge
/// `(i, i + offset)` is replaced by a uniformly drawn node, redrawing until
/// the new edge is neither a self-loop nor a duplicate. The edge count is
/// therefore exactly `k n`.
pub fn generate_ws(n: usize, k: usize, p: f64, seed: u64) -> Result<WattsStrogatzGraph> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < 2 * k + 1 {
        return Err(Error::invalid(format!("N = {n} too small for k = {k} (need N >= 2k + 1)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("rewiring probability {p} outside [0, 1]")));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("N exceeds u32 range"));
    }

    let mut rng = seeds::rng(seed);
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(2 * k); n];
    let mut edges = Vec::with_capacity(k * n);
    for offset in 1..=k {
        for i in 0..n {
            let j = (i + offset) % n;
            adj[i].push(j as u32);
            adj[j].push(i as u32);
            edges.push((i as u32, j as u32));
        }
    }

    let mut rewired = 0;
    if p > 0.0 {
        for e in edges.iter_mut() {
            if rng.gen::<f64>() >= p {
                continue;
            }
            let (i, j) = (e.0 as usize, e.1 as usize);
            if adj[i].len() >= n - 1 {
                continue;
            }
            let target = loop {
                let u = rng.gen_range(0..n);
                if u != i && !adj[i].contains(&(u as u32)) {
                    break u;
                }
            };
            remove(&mut adj[i], j as u32);
            remove(&mut adj[j], i as u32);
            adj[i].push(target as u32);
            adj[target].push(i as u32);
            *e = (i as u32, target as u32);
            rewired += 1;
        }
    }

    Ok(WattsStrogatzGraph::assemble(n, k, p, seed, edges, adj, rewired))
}

fn remove(list: &mut Vec<u32>, value: u32) {
    if let Some(pos) = list.iter().position(|&v| v == value) {
        list.swap_remove(pos);
    }
}

impl WattsStrogatzGraph {
    fn assemble(
        n: usize,
        k: usize,
        p: f64,
        seed: u64,
        edges: Vec<(u32, u32)>,
        mut adj: Vec<Vec<u32>>,
        rewired: usize,
    ) -> Self {
        let edges = edges
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adjacency = Vec::new();
        offsets.push(0);
        for list in adj.iter_mut() {
            list.sort_unstable();
            adjacency.extend_from_slice(list);
            offsets.push(adjacency.len());
        }
        WattsStrogatzGraph {
            n,
            k,
            p,
            seed,
            edges,
            offsets,
            adjacency,
            rewired,
        }
    }

    /// Rebuilds a graph from a stored edge list, validating structure.
    pub(crate) fn from_edges(
        n: usize,
        k: usize,
        p: f64,
        seed: u64,
        edges: Vec<(u32, u32)>,
        rewired: Option<usize>,
    ) -> Result<Self> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in &edges {
            let (a_, b_) = (a as usize, b as usize);
            if a_ >= n || b_ >= n {
                return Err(Error::invalid(format!("edge ({}, {}) outside ring of {n}", a_ + 1, b_ + 1)));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {}", a_ + 1)));
            }
            if adj[a_].contains(&b) {
                return Err(Error::invalid(format!("duplicate edge ({}, {})", a_ + 1, b_ + 1)));
            }
            adj[a_].push(b);
            adj[b_].push(a);
        }
        let rewired = rewired.unwrap_or_else(|| {
            edges
                .iter()
                .filter(|&&(a, b)| ring_distance(a as usize, b as usize, n) > k)
                .count()
        });
        Ok(Self::assemble(n, k, p, seed, edges, adj, rewired))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 0-based `(low, high)` edge pairs.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Sorted 0-based neighbors of 0-based node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Number of edges moved by the rewiring pass. Graphs loaded without that
    /// record fall back to counting edges longer than `k`, a lower bound.
    pub fn rewired(&self) -> usize {
        self.rewired
    }
}

/// Empirical κ of a graph: edges within ring distance `d` are short-range.
pub fn kappa_graph(graph: &WattsStrogatzGraph, d: usize) -> Result<KappaReport> {
    if d == 0 || d > graph.n / 2 {
        return Err(Error::invalid(format!("short-range cutoff {d} outside [1, {}]", graph.n / 2)));
    }
    let short = graph
        .edges
        .iter()
        .filter(|&&(a, b)| ring_distance(a as usize, b as usize, graph.n) <= d)
        .count();
    let long = graph.edges.len() - short;
    // Average degrees: every edge contributes to two nodes.
    let scale = 2.0 / graph.n as f64;
    Ok(KappaReport::from_parts(short as f64 * scale, long as f64 * scale, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn assert_simple(g: &WattsStrogatzGraph) {
        let mut seen = HashSet::new();
        for &(a, b) in g.edges() {
            assert_ne!(a, b, "self-loop");
            assert!(a < b);
            assert!(seen.insert((a, b)), "duplicate edge ({a}, {b})");
        }
        assert_eq!(g.edges().len(), g.k() * g.n());
    }

    #[test]
    fn pristine_ring_is_k_nearest_neighbor_lattice() {
        let g = generate_ws(501, 2, 0.0, 3).unwrap();
        assert_simple(&g);
        for i in 0..501usize {
            assert_eq!(g.degree(i), 4);
            let mut expected: Vec<u32> = [1usize, 2, 499, 500]
                .iter()
                .map(|&o| ((i + o) % 501) as u32)
                .collect();
            expected.sort_unstable();
            assert_eq!(g.neighbors(i), expected.as_slice());
        }
        assert_eq!(g.rewired(), 0);
        assert_eq!(kappa_graph(&g, 2).unwrap().kappa, 1.0);
    }

    #[test]
    fn full_rewiring_keeps_edge_count() {
        for seed in 0..5 {
            let g = generate_ws(501, 2, 1.0, seed).unwrap();
            assert_simple(&g);
            assert_eq!(g.edges().len(), 1002);
            assert_eq!(g.rewired(), 1002);
            let degree_sum: usize = (0..501).map(|i| g.degree(i)).sum();
            assert_eq!(degree_sum, 2004);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_ws(301, 3, 0.2, 99).unwrap();
        let b = generate_ws(301, 3, 0.2, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_ws(301, 3, 0.2, 100).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn rewired_fraction_is_binomial() {
        // Over 200 seeds the total number of rewired edges is Binomial(200 kN, p).
        let (n, k, p) = (501usize, 2usize, 0.08733);
        let trials = 200usize;
        let total: usize = (0..trials as u64)
            .map(|s| generate_ws(n, k, p, s).unwrap().rewired())
            .sum();
        let m = (trials * k * n) as f64;
        let mean = m * p;
        let sd = (m * p * (1.0 - p)).sqrt();
        assert!(
            (total as f64 - mean).abs() < 4.0 * sd,
            "rewired {total}, expected {mean} +- {sd}"
        );
    }

    #[test]
    fn small_and_invalid_inputs() {
        assert!(generate_ws(4, 2, 0.5, 0).is_err());
        assert!(generate_ws(5, 0, 0.5, 0).is_err());
        assert!(generate_ws(11, 2, -0.1, 0).is_err());
        // Densest feasible ring still terminates under full rewiring.
        let g = generate_ws(5, 2, 1.0, 1).unwrap();
        assert_simple(&g);
    }

    #[test]
    fn from_edges_rejects_malformed_lists() {
        assert!(WattsStrogatzGraph::from_edges(5, 1, 0.0, 0, vec![(0, 0)], None).is_err());
        assert!(WattsStrogatzGraph::from_edges(5, 1, 0.0, 0, vec![(0, 1), (1, 0)], None).is_err());
        assert!(WattsStrogatzGraph::from_edges(5, 1, 0.0, 0, vec![(0, 7)], None).is_err());
    }
}
