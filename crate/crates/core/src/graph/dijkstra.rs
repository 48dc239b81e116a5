//! Exact shortest-path oracle. Deterministic: among equal-cost shortest
//! paths it returns the lexicographically smallest node sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GraphError, PathResult, RoadGraph};
use crate::scalar::Scalar;

struct Entry<F> {
    dist: F,
    node: usize,
}

impl<F: Scalar> PartialEq for Entry<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F: Scalar> Eq for Entry<F> {}

impl<F: Scalar> PartialOrd for Entry<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Scalar> Ord for Entry<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap via Reverse at the call site; dists are finite (validated
        // costs), so partial_cmp cannot fail.
        self.dist
            .partial_cmp(&other.dist)
            .expect("finite distances")
            .then(self.node.cmp(&other.node))
    }
}

/// Distance from every node to `dest`, or None where dest is unreachable.
fn distance_to_dest<F: Scalar>(g: &RoadGraph<F>, dest: usize) -> Vec<Option<F>> {
    let mut dist: Vec<Option<F>> = vec![None; g.node_count()];
    let mut settled = vec![false; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dest] = Some(F::zero());
    heap.push(std::cmp::Reverse(Entry {
        dist: F::zero(),
        node: dest,
    }));
    while let Some(std::cmp::Reverse(Entry { dist: d, node })) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        for &e in g.in_edges(node) {
            let rec = g.edge(e);
            let cand = rec.cost + d;
            if dist[rec.from].map_or(true, |cur| cand < cur) {
                dist[rec.from] = Some(cand);
                heap.push(std::cmp::Reverse(Entry {
                    dist: cand,
                    node: rec.from,
                }));
            }
        }
    }
    dist
}

/// Exact cheapest path from `origin` to `dest`. Ties on cost break toward
/// the lexicographically smallest node sequence. `origin == dest` yields the
/// single-node path with cost zero.
pub fn dijkstra_shortest_path<F: Scalar>(
    g: &RoadGraph<F>,
    origin: &str,
    dest: &str,
) -> Result<PathResult<F>, GraphError> {
    let o = g
        .node_index(origin)
        .ok_or_else(|| GraphError::UnknownNode(origin.to_owned()))?;
    let d = g
        .node_index(dest)
        .ok_or_else(|| GraphError::UnknownNode(dest.to_owned()))?;
    if o == d {
        return Ok(PathResult {
            nodes: vec![g.node_id(o).clone()],
            total_cost: F::zero(),
        });
    }

    let dist = distance_to_dest(g, d);
    if dist[o].is_none() {
        return Err(GraphError::Unreachable {
            origin: origin.to_owned(),
            dest: dest.to_owned(),
        });
    }

    // Forward greedy walk over the residual distances. At each node take the
    // successor minimizing cost + dist(successor); ties go to the smaller
    // node index, which is the smaller id. Residual distance strictly
    // decreases each hop, so the walk terminates.
    let mut nodes = vec![g.node_id(o).clone()];
    let mut total = F::zero();
    let mut cur = o;
    for _ in 0..g.node_count() {
        if cur == d {
            return Ok(PathResult {
                nodes,
                total_cost: total,
            });
        }
        let mut best: Option<(F, usize, F)> = None; // (key, to, edge cost)
        for &e in g.out_edges(cur) {
            let rec = g.edge(e);
            let Some(rest) = dist[rec.to] else { continue };
            let key = rec.cost + rest;
            let better = match &best {
                None => true,
                Some((bk, bt, _)) => key < *bk || (key == *bk && rec.to < *bt),
            };
            if better {
                best = Some((key, rec.to, rec.cost));
            }
        }
        let (_, to, cost) = best.expect("reachable node has a usable successor");
        nodes.push(g.node_id(to).clone());
        total += cost;
        cur = to;
    }
    if cur == d {
        return Ok(PathResult {
            nodes,
            total_cost: total,
        });
    }
    Err(GraphError::Validation(
        "shortest-path walk failed to settle; edge costs are numerically degenerate".into(),
    ))
}
