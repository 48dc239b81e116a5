//! Road network: a routing graph plus per-unit geometry and per-node
//! signal timing.

use std::io::Read;

use crate::graph::{GraphDto, GraphError, RoadGraph};
use crate::scalar::Scalar;

/// Physical shape of one unit. Lane counts here are the as-built values;
/// the engine tracks live lane counts separately so incidents can change
/// them mid-run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitGeom<F> {
    pub length_m: F,
    pub lanes: u32,
    pub free_flow_time_s: F,
}

/// Fixed-cycle signal timing at one intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalConfig<F> {
    pub cycle_s: F,
    pub lost_time_s: F,
    pub min_green_s: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork<F> {
    pub graph: RoadGraph<F>,
    units: Vec<UnitGeom<F>>,
    signals: Vec<Option<SignalConfig<F>>>,
}

impl<F: Scalar> RoadNetwork<F> {
    /// Geometry of the unit at a graph edge index.
    pub fn unit(&self, edge: usize) -> &UnitGeom<F> {
        &self.units[edge]
    }

    pub fn signal(&self, node: usize) -> Option<&SignalConfig<F>> {
        self.signals[node].as_ref()
    }

    pub fn signalized_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.signals
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|_| i))
    }
}

const DEFAULT_MIN_GREEN_S: f64 = 7.0;

/// Loads a network file: the graph JSON format with `lengthM` and `lanes`
/// required on every edge. `freeFlowTimeS` defaults to the edge cost (the
/// routing cost of a network is its free-flow travel time). Nodes with
/// `cycleS` are signalized; their timing must fit one minimum green per
/// incoming approach plus lost time into the cycle.
pub fn load_network<F: Scalar>(reader: impl Read) -> Result<RoadNetwork<F>, GraphError> {
    let dto = GraphDto::parse(reader)?;
    let graph: RoadGraph<F> = dto.build()?;

    let mut units = vec![None; graph.edge_count()];
    for e in &dto.edges {
        let from = graph.node_index(&e.from).expect("built from this DTO");
        let to = graph.node_index(&e.to).expect("built from this DTO");
        let idx = graph.edge_between(from, to).expect("built from this DTO");
        let length_m = e.length_m.ok_or_else(|| {
            GraphError::Validation(format!("edge {}>{}: lengthM is required", e.from, e.to))
        })?;
        let lanes = e.lanes.ok_or_else(|| {
            GraphError::Validation(format!("edge {}>{}: lanes is required", e.from, e.to))
        })?;
        if !(length_m > 0.0) || !length_m.is_finite() {
            return Err(GraphError::Validation(format!(
                "edge {}>{}: lengthM {} must be positive",
                e.from, e.to, length_m
            )));
        }
        if lanes == 0 {
            return Err(GraphError::Validation(format!(
                "edge {}>{}: lanes must be at least 1",
                e.from, e.to
            )));
        }
        let free_flow = e.free_flow_time_s.unwrap_or(e.cost);
        if !(free_flow > 0.0) || !free_flow.is_finite() {
            return Err(GraphError::Validation(format!(
                "edge {}>{}: freeFlowTimeS {} must be positive",
                e.from, e.to, free_flow
            )));
        }
        units[idx] = Some(UnitGeom {
            length_m: F::of(length_m),
            lanes,
            free_flow_time_s: F::of(free_flow),
        });
    }
    let units: Vec<UnitGeom<F>> = units
        .into_iter()
        .map(|u| u.expect("every graph edge came from a DTO edge"))
        .collect();

    let mut signals = vec![None; graph.node_count()];
    for n in &dto.nodes {
        let Some(cycle_s) = n.cycle_s else {
            if n.lost_time_s.is_some() || n.min_green_s.is_some() {
                return Err(GraphError::Validation(format!(
                    "node {}: signal timing without cycleS",
                    n.id
                )));
            }
            continue;
        };
        let idx = graph.node_index(&n.id).expect("built from this DTO");
        let lost = n.lost_time_s.unwrap_or(0.0);
        let min_green = n.min_green_s.unwrap_or(DEFAULT_MIN_GREEN_S);
        if !(cycle_s > 0.0) || lost < 0.0 || min_green < 0.0 {
            return Err(GraphError::Validation(format!(
                "node {}: signal timing must be non-negative with a positive cycle",
                n.id
            )));
        }
        let approaches = graph.in_edges(idx).len();
        if approaches == 0 {
            return Err(GraphError::Validation(format!(
                "node {}: signalized but has no incoming approaches",
                n.id
            )));
        }
        if lost + approaches as f64 * min_green > cycle_s {
            return Err(GraphError::Validation(format!(
                "node {}: cycle {cycle_s}s cannot fit {approaches} greens of {min_green}s plus {lost}s lost",
                n.id
            )));
        }
        signals[idx] = Some(SignalConfig {
            cycle_s: F::of(cycle_s),
            lost_time_s: F::of(lost),
            min_green_s: F::of(min_green),
        });
    }

    Ok(RoadNetwork {
        graph,
        units,
        signals,
    })
}
