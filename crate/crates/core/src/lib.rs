//! Shortest/cheapest-path search on directed road graphs, built around a
//! water-drop landscape-erosion heuristic, plus the baselines and traffic
//! machinery needed to evaluate it: a pheromone-trail solver, seeded random
//! walks, an exact Dijkstra oracle, a fixed-step congestion simulator and a
//! sensor telemetry pipeline.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (any `num_traits`
//! float); the `*64` aliases below pin the f64 instantiations the CLI and
//! most callers use.

pub mod baselines;
pub mod graph;
pub mod parallel;
pub mod rfd;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod telemetry;

pub use graph::{NodeId, PathResult, RoadGraph};
pub use scalar::Scalar;
pub use stats::SolveStats;

// ---- Concrete aliases (default scalar: f64) ----

pub type RoadGraph64 = graph::RoadGraph<f64>;
pub type PathResult64 = graph::PathResult<f64>;
pub type Landscape64 = rfd::Landscape<f64>;
pub type RfdParams64 = rfd::RfdParams<f64>;
pub type AcoParams64 = baselines::AcoParams<f64>;
pub type PheromoneField64 = baselines::PheromoneField<f64>;
pub type RoadNetwork64 = sim::RoadNetwork<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type CongestionMap64 = telemetry::CongestionMap<f64>;
