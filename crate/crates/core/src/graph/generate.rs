//! Seeded random instances with guaranteed reachability: every graph gets a
//! directed backbone visiting all nodes, rooted at node 0, so the first node
//! (lowest id) reaches everything.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{GraphError, NodeId, RoadGraph};
use crate::rng::rng_from;
use crate::scalar::Scalar;

/// Generates a connected random graph with `n` nodes, `m` edges and integer
/// costs drawn uniformly from `cost_range` (inclusive). The same inputs
/// always produce the same graph.
///
/// Construction: nodes `n0..`, a backbone path over a seeded permutation
/// starting at node 0 (n-1 edges), then `m - (n-1)` distinct extra edges
/// chosen by seeded partial shuffle of the remaining ordered pairs.
pub fn random_graph<F: Scalar>(
    n: usize,
    m: usize,
    cost_range: (u32, u32),
    seed: u64,
) -> Result<RoadGraph<F>, GraphError> {
    let (lo, hi) = cost_range;
    if n < 2 {
        return Err(GraphError::InfeasibleParams(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if m < n - 1 || m > n * (n - 1) {
        return Err(GraphError::InfeasibleParams(format!(
            "edge count {m} outside [{}, {}] for {n} nodes",
            n - 1,
            n * (n - 1)
        )));
    }
    if lo < 1 || lo > hi {
        return Err(GraphError::InfeasibleParams(format!(
            "cost range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
        )));
    }

    let width = (n - 1).to_string().len();
    let ids: Vec<NodeId> = (0..n)
        .map(|i| NodeId::new(format!("n{i:0width$}")).expect("generated id is valid"))
        .collect();

    let mut rng = rng_from(seed);

    // Backbone over a permutation pinned to start at node 0.
    let mut perm: Vec<usize> = (1..n).collect();
    perm.shuffle(&mut rng);
    perm.insert(0, 0);

    let mut used = std::collections::HashSet::new();
    let mut edge_list = Vec::with_capacity(m);
    for w in perm.windows(2) {
        let cost = rng.gen_range(lo..=hi);
        used.insert((w[0], w[1]));
        edge_list.push((ids[w[0]].clone(), ids[w[1]].clone(), F::of(cost as f64)));
    }

    // Remaining ordered pairs, deterministically enumerated, then a partial
    // Fisher-Yates picks the extras.
    let mut free: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && !used.contains(&(a, b)))
        .collect();
    let extra = m - (n - 1);
    for i in 0..extra {
        let j = rng.gen_range(i..free.len());
        free.swap(i, j);
    }
    for &(a, b) in &free[..extra] {
        let cost = rng.gen_range(lo..=hi);
        edge_list.push((ids[a].clone(), ids[b].clone(), F::of(cost as f64)));
    }

    RoadGraph::new(ids, edge_list)
}
