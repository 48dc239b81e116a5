//! Canonical JSON graph file format. Network files used by the simulator
//! are a superset of this (extra per-edge geometry and per-node signal
//! fields), so the plain loader tolerates and ignores the extra keys.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{GraphError, NodeId, RoadGraph};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct NodeDto {
    pub id: String,
    #[serde(rename = "cycleS", default, skip_serializing_if = "Option::is_none")]
    pub cycle_s: Option<f64>,
    #[serde(rename = "lostTimeS", default, skip_serializing_if = "Option::is_none")]
    pub lost_time_s: Option<f64>,
    #[serde(rename = "minGreenS", default, skip_serializing_if = "Option::is_none")]
    pub min_green_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct EdgeDto {
    pub from: String,
    pub to: String,
    pub cost: f64,
    #[serde(rename = "lengthM", default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanes: Option<u32>,
    #[serde(
        rename = "freeFlowTimeS",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub free_flow_time_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct GraphDto {
    pub nodes: Vec<NodeDto>,
    pub edges: Vec<EdgeDto>,
}

impl GraphDto {
    pub(crate) fn parse(mut reader: impl Read) -> Result<Self, GraphError> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| GraphError::Parse(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| GraphError::Parse(e.to_string()))
    }

    pub(crate) fn build<F: Scalar>(&self) -> Result<RoadGraph<F>, GraphError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeId::new(n.id.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = self
            .edges
            .iter()
            .map(|e| Ok((NodeId::new(e.from.clone())?, NodeId::new(e.to.clone())?, F::of(e.cost))))
            .collect::<Result<Vec<_>, GraphError>>()?;
        RoadGraph::new(nodes, edges)
    }
}

/// Loads a graph from JSON (`{"nodes": [{"id": ...}], "edges":
/// [{"from", "to", "cost"}]}`). Unknown keys are ignored.
pub fn load_graph<F: Scalar>(reader: impl Read) -> Result<RoadGraph<F>, GraphError> {
    GraphDto::parse(reader)?.build()
}

impl<F: Scalar> RoadGraph<F> {
    /// Loads a graph from a JSON string.
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        load_graph(text.as_bytes())
    }

    /// Canonical JSON rendering: nodes in id order, edges in `(from, to)`
    /// order. `load_graph` on the output reproduces the graph exactly.
    pub fn to_json_string(&self) -> String {
        let dto = GraphDto {
            nodes: self
                .nodes()
                .map(|id| NodeDto {
                    id: id.as_str().to_owned(),
                    cycle_s: None,
                    lost_time_s: None,
                    min_green_s: None,
                })
                .collect(),
            edges: self
                .edges()
                .map(|e| EdgeDto {
                    from: self.node_id(e.from).as_str().to_owned(),
                    to: self.node_id(e.to).as_str().to_owned(),
                    cost: e.cost.as_f64(),
                    length_m: None,
                    lanes: None,
                    free_flow_time_s: None,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&dto).expect("graph serializes");
        text.push('\n');
        text
    }
}
