//! Run counters shared by the landscape and pheromone solvers.

/// What a solver did on the way to its answer. `launched` counts agents
/// (drops or ants) sent out across all iterations; `completions` the ones
/// that reached the destination; `deposits` sediment or pheromone deposit
/// events; `invariant_violations` failed post-iteration state checks
/// (expected to stay 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    pub iterations: u32,
    pub launched: u64,
    pub completions: u64,
    pub deposits: u64,
    pub invariant_violations: u64,
    pub converged: bool,
}
