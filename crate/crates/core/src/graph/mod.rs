//! Directed road graphs: validated construction, the canonical JSON file
//! format, path results with a shared validator, an exact shortest-path
//! oracle and a seeded random-instance generator.

mod dijkstra;
mod generate;
mod io;

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

pub use dijkstra::dijkstra_shortest_path;
pub use generate::random_graph;
pub use io::load_graph;
pub(crate) use io::GraphDto;

/// Maximum length of a node identifier, in bytes.
pub const MAX_NODE_ID_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph file parse error: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    Validation(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no path from '{origin}' to '{dest}'")]
    Unreachable { origin: String, dest: String },
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
}

/// Validated node identifier: non-empty printable ASCII, at most
/// [`MAX_NODE_ID_LEN`] bytes, and free of `,` `>` and whitespace so node ids
/// embed unambiguously in unit ids (`from>to`) and CSV output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() {
            return Err(GraphError::Validation("empty node id".into()));
        }
        if id.len() > MAX_NODE_ID_LEN {
            return Err(GraphError::Validation(format!(
                "node id '{id}' exceeds {MAX_NODE_ID_LEN} bytes"
            )));
        }
        if let Some(bad) = id
            .chars()
            .find(|c| !c.is_ascii_graphic() || matches!(c, ',' | '>'))
        {
            return Err(GraphError::Validation(format!(
                "node id '{id}' contains forbidden character {bad:?}"
            )));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Directed edge, endpoints stored as node indices into the owning graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRec<F> {
    pub from: usize,
    pub to: usize,
    pub cost: F,
}

/// Immutable directed graph. Nodes are held in ascending id order (so node
/// index order is lexicographic id order) and edges in ascending
/// `(from, to)` order; adjacency lists index into the edge table.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph<F> {
    ids: Vec<NodeId>,
    index: HashMap<String, usize>,
    edges: Vec<EdgeRec<F>>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl<F: Scalar> RoadGraph<F> {
    /// Builds a graph from explicit nodes and `(from, to, cost)` edges.
    /// Rejects duplicate ids, unknown endpoints, self-loops, parallel edges
    /// and non-positive or non-finite costs.
    pub fn new(
        nodes: Vec<NodeId>,
        edge_list: Vec<(NodeId, NodeId, F)>,
    ) -> Result<Self, GraphError> {
        let mut ids = nodes;
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::Validation(format!(
                "duplicate node id '{}'",
                w[0]
            )));
        }
        let index: HashMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str().to_owned(), i))
            .collect();

        let mut edges = Vec::with_capacity(edge_list.len());
        for (from, to, cost) in edge_list {
            let fi = *index.get(from.as_str()).ok_or_else(|| {
                GraphError::Validation(format!("edge endpoint '{from}' is not a declared node"))
            })?;
            let ti = *index.get(to.as_str()).ok_or_else(|| {
                GraphError::Validation(format!("edge endpoint '{to}' is not a declared node"))
            })?;
            if fi == ti {
                return Err(GraphError::Validation(format!("self-loop at '{from}'")));
            }
            if !(cost > F::zero()) || !cost.is_finite() {
                return Err(GraphError::Validation(format!(
                    "edge {from}>{to} has non-positive or non-finite cost {cost}"
                )));
            }
            edges.push(EdgeRec {
                from: fi,
                to: ti,
                cost,
            });
        }
        edges.sort_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)));
        if let Some(w) = edges.windows(2).find(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to)) {
            return Err(GraphError::Validation(format!(
                "parallel edge {}>{}",
                ids[w[0].from], ids[w[0].to]
            )));
        }

        let mut out = vec![Vec::new(); ids.len()];
        let mut inc = vec![Vec::new(); ids.len()];
        for (e, rec) in edges.iter().enumerate() {
            out[rec.from].push(e);
            inc[rec.to].push(e);
        }
        Ok(RoadGraph {
            ids,
            index,
            edges,
            out,
            inc,
        })
    }

    /// Convenience constructor: nodes are inferred from edge endpoints.
    pub fn from_edge_list(list: &[(&str, &str, f64)]) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        let mut nodes = Vec::new();
        for (a, b, _) in list {
            for id in [a, b] {
                if seen.insert(*id) {
                    nodes.push(NodeId::new(*id)?);
                }
            }
        }
        let edges = list
            .iter()
            .map(|(a, b, c)| Ok((NodeId::new(*a)?, NodeId::new(*b)?, F::of(*c))))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::new(nodes, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, idx: usize) -> &NodeId {
        &self.ids[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.ids.iter()
    }

    pub fn edge(&self, e: usize) -> &EdgeRec<F> {
        &self.edges[e]
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeRec<F>> {
        self.edges.iter()
    }

    /// Outgoing edge indices of a node, ordered by target id.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    /// Incoming edge indices of a node, ordered by source id.
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.inc[node]
    }

    /// Edge index of `from -> to`, if present.
    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.out[from]
            .binary_search_by_key(&to, |&e| self.edges[e].to)
            .ok()
            .map(|pos| self.out[from][pos])
    }

    /// Unit id of an edge: `from>to`.
    pub fn unit_id(&self, e: usize) -> String {
        let rec = &self.edges[e];
        format!("{}>{}", self.ids[rec.from], self.ids[rec.to])
    }

    /// Edge index for a `from>to` unit id.
    pub fn unit_index(&self, unit: &str) -> Option<usize> {
        let (from, to) = unit.split_once('>')?;
        self.edge_between(self.node_index(from)?, self.node_index(to)?)
    }

    /// Same topology with per-edge costs replaced (indexed like the edge
    /// table). Costs must be positive and finite.
    pub fn with_costs(&self, costs: &[F]) -> Result<Self, GraphError> {
        if costs.len() != self.edges.len() {
            return Err(GraphError::Validation(format!(
                "cost table has {} entries for {} edges",
                costs.len(),
                self.edges.len()
            )));
        }
        let mut g = self.clone();
        for (rec, &c) in g.edges.iter_mut().zip(costs) {
            if !(c > F::zero()) || !c.is_finite() {
                return Err(GraphError::Validation(format!(
                    "replacement cost {c} is not positive and finite"
                )));
            }
            rec.cost = c;
        }
        Ok(g)
    }
}

/// A walk through the graph with its summed edge cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult<F> {
    pub nodes: Vec<NodeId>,
    pub total_cost: F,
}

impl<F: Scalar> PathResult<F> {
    /// `S -> M -> D` rendering for logs and CLI output.
    pub fn arrow_string(&self) -> String {
        self.nodes
            .iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join(" -> ")
    }

    /// `S|M|D` rendering for CSV cells.
    pub fn pipe_string(&self) -> String {
        self.nodes
            .iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Checks a path against its graph: non-empty, every hop an existing edge,
/// no repeated node, and `total_cost` equal to the sum of hop costs.
pub fn validate_path<F: Scalar>(g: &RoadGraph<F>, p: &PathResult<F>) -> Result<(), GraphError> {
    if p.nodes.is_empty() {
        return Err(GraphError::Validation("empty path".into()));
    }
    let mut idxs = Vec::with_capacity(p.nodes.len());
    for id in &p.nodes {
        idxs.push(
            g.node_index(id.as_str())
                .ok_or_else(|| GraphError::UnknownNode(id.as_str().to_owned()))?,
        );
    }
    let mut seen = HashSet::with_capacity(idxs.len());
    for &i in &idxs {
        if !seen.insert(i) {
            return Err(GraphError::Validation(format!(
                "repeated node '{}' in path",
                g.node_id(i)
            )));
        }
    }
    let mut sum = F::zero();
    for w in idxs.windows(2) {
        let e = g.edge_between(w[0], w[1]).ok_or_else(|| {
            GraphError::Validation(format!(
                "missing edge {}>{} in path",
                g.node_id(w[0]),
                g.node_id(w[1])
            ))
        })?;
        sum += g.edge(e).cost;
    }
    let tol = F::of(1e-9).max(F::epsilon() * F::of(8.0) * sum.abs());
    if (p.total_cost - sum).abs() > tol {
        return Err(GraphError::Validation(format!(
            "declared cost {} differs from summed cost {}",
            p.total_cost, sum
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
