//! Discrete-time congestion simulator.
//!
//! Roads are directed units with length, lane count, and free-flow travel
//! time; intersections may carry a fixed-cycle signal. Vehicles spawn by
//! Poisson processes, queue onto units, and cross intersections limited by
//! green-time discharge credits and downstream space. Occupancy yields a
//! congestion index per unit, the index inflates travel times, and the
//! chosen router replans vehicles against snapshots of those inflated
//! times. Every run is tick-deterministic: identical inputs produce byte
//! identical metric streams at any worker count.

mod engine;
mod network;
mod signal;

#[cfg(test)]
mod tests;

pub use engine::{run_scenario, SimOutput, SimSummary, VehicleRecord};
pub use network::{load_network, RoadNetwork, SignalConfig, UnitGeom};
pub use signal::adjust_signal_splits;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::AcoParams;
use crate::graph::GraphError;
use crate::rfd::RfdParams;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("network: {0}")]
    Network(#[from] GraphError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("signal at '{node}' cannot serve {approaches} approaches: {detail}")]
    InfeasibleCycle {
        node: String,
        approaches: usize,
        detail: String,
    },
}

/// Fraction of jam occupancy a unit is at, clamped to `[0, 1]`.
/// `jam_density` is vehicles per metre per lane.
pub fn congestion_index<F: Scalar>(count: u64, length_m: F, lanes: u32, jam_density: F) -> F {
    debug_assert!(lanes > 0 && length_m > F::zero());
    let density = F::of(count as f64) / (length_m * F::of(lanes as f64));
    (density / jam_density).min(F::one())
}

/// Congestion-inflated travel time: `free_flow * (1 + alpha * chi^beta)`.
pub fn travel_time<F: Scalar>(free_flow_s: F, chi: F, alpha: F, beta: F) -> F {
    free_flow_s * (F::one() + alpha * chi.powf(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouterKind {
    /// Water-drop landscape solver on live travel-time snapshots.
    Rfd,
    /// Ant system on live travel-time snapshots.
    Aco,
    /// Exact shortest path on live travel-time snapshots.
    Dijkstra,
    /// Free-flow shortest path fixed at admission; never replans.
    Static,
}

/// A Poisson demand stream between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(
    serialize = "F: Serialize",
    deserialize = "F: Deserialize<'de>"
))]
pub struct SpawnSpec<F> {
    pub origin: String,
    pub dest: String,
    pub rate_per_s: F,
    /// Spawning stops at this time; the rest of the run drains the network.
    #[serde(default)]
    pub until_s: Option<F>,
}

/// A scheduled lane-count change on one unit (e.g. an incident closing a
/// lane).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(
    serialize = "F: Serialize",
    deserialize = "F: Deserialize<'de>"
))]
pub struct LaneEvent<F> {
    pub at_s: F,
    pub unit: String,
    pub lanes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(
    serialize = "F: Serialize",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct SimConfig<F> {
    pub duration_s: F,
    pub step_s: F,
    pub reroute_every_s: F,
    /// Vehicles per metre per lane at standstill.
    pub jam_density: F,
    pub delay_alpha: F,
    pub delay_beta: F,
    /// Vehicles per second per lane a green approach discharges.
    pub saturation_flow: F,
    pub telemetry_window_ms: u64,
    pub router: RouterKind,
    pub seed: u64,
    /// Worker threads handed to the embedded routers (overrides the
    /// `workers` fields inside `rfd` and `aco`).
    pub workers: usize,
    pub spawns: Vec<SpawnSpec<F>>,
    pub events: Vec<LaneEvent<F>>,
    pub rfd: RfdParams<F>,
    pub aco: AcoParams<F>,
}

impl<F: Scalar> Default for SimConfig<F> {
    fn default() -> Self {
        SimConfig {
            duration_s: F::of(300.0),
            step_s: F::one(),
            reroute_every_s: F::of(30.0),
            jam_density: F::of(0.15),
            delay_alpha: F::of(4.0),
            delay_beta: F::of(4.0),
            saturation_flow: F::of(0.5),
            telemetry_window_ms: 5000,
            router: RouterKind::Rfd,
            seed: 0,
            workers: 1,
            spawns: Vec::new(),
            events: Vec::new(),
            rfd: RfdParams::default(),
            aco: AcoParams::default(),
        }
    }
}

/// Parses a TOML scenario. Unknown keys are rejected so typos surface
/// instead of silently falling back to defaults.
pub fn load_scenario<F>(text: &str) -> Result<SimConfig<F>, SimError>
where
    F: Scalar + serde::de::DeserializeOwned,
{
    toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))
}

impl<F: Scalar> SimConfig<F> {
    pub fn validate(&self, network: &RoadNetwork<F>) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if !(self.duration_s > F::zero()) || !self.duration_s.is_finite() {
            return fail(format!("duration_s {} must be positive", self.duration_s));
        }
        if !(self.step_s > F::zero()) || !self.step_s.is_finite() {
            return fail(format!("step_s {} must be positive", self.step_s));
        }
        if self.reroute_every_s < self.step_s {
            return fail(format!(
                "reroute_every_s {} must be at least step_s {}",
                self.reroute_every_s, self.step_s
            ));
        }
        if !(self.jam_density > F::zero()) || !self.jam_density.is_finite() {
            return fail(format!("jam_density {} must be positive", self.jam_density));
        }
        if !(self.delay_alpha >= F::zero()) || !(self.delay_beta >= F::zero()) {
            return fail("delay_alpha and delay_beta must be non-negative".into());
        }
        if !(self.saturation_flow > F::zero()) {
            return fail(format!(
                "saturation_flow {} must be positive",
                self.saturation_flow
            ));
        }
        if self.telemetry_window_ms == 0 {
            return fail("telemetry_window_ms must be positive".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        let g = &network.graph;
        for (i, s) in self.spawns.iter().enumerate() {
            let origin = g
                .node_index(&s.origin)
                .ok_or_else(|| SimError::Config(format!("spawn {i}: unknown origin '{}'", s.origin)))?;
            let dest = g
                .node_index(&s.dest)
                .ok_or_else(|| SimError::Config(format!("spawn {i}: unknown dest '{}'", s.dest)))?;
            if origin == dest {
                return fail(format!("spawn {i}: origin equals dest '{}'", s.origin));
            }
            if !(s.rate_per_s >= F::zero()) || !s.rate_per_s.is_finite() {
                return fail(format!("spawn {i}: rate {} must be non-negative", s.rate_per_s));
            }
            if let Some(u) = s.until_s {
                if !(u >= F::zero()) {
                    return fail(format!("spawn {i}: until_s {u} must be non-negative"));
                }
            }
            crate::graph::dijkstra_shortest_path(g, &s.origin, &s.dest)
                .map_err(|e| SimError::Config(format!("spawn {i}: {e}")))?;
        }
        for (i, e) in self.events.iter().enumerate() {
            g.unit_index(&e.unit)
                .ok_or_else(|| SimError::Config(format!("event {i}: unknown unit '{}'", e.unit)))?;
            if !(e.at_s >= F::zero()) || e.at_s > self.duration_s {
                return fail(format!("event {i}: at_s {} outside the run", e.at_s));
            }
            if e.lanes == 0 {
                return fail(format!("event {i}: lanes must be at least 1"));
            }
        }
        self.rfd
            .validate()
            .map_err(|e| SimError::Config(format!("rfd: {e}")))?;
        self.aco
            .validate()
            .map_err(|e| SimError::Config(format!("aco: {e}")))?;
        Ok(())
    }
}
