//! Ant system with pheromone trails.
//!
//! Each iteration releases a batch of ants at the origin. An ant walks edge
//! by edge, drawn toward high pheromone and low cost (weight
//! `tau^alpha * (1/cost)^beta`), normally under a tabu rule that forbids
//! revisiting a node. After the batch, all trails evaporate by a fixed
//! fraction and every ant that reached the destination lays `deposit_q /
//! path cost` on each edge it walked. Convergence mirrors the landscape
//! solver: the greedy highest-weight trail walk must stay identical for a
//! run of iterations. The reported path is the cheapest complete walk any
//! ant found.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sample_weighted;
use crate::graph::{dijkstra_shortest_path, GraphError, PathResult, RoadGraph};
use crate::parallel::run_indexed;
use crate::rng::{rng_from, substream};
use crate::scalar::Scalar;
use crate::stats::SolveStats;

#[derive(Debug, Error)]
pub enum AcoError<F: Scalar> {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no path from '{origin}' to '{dest}'")]
    Unreachable { origin: String, dest: String },
    #[error("no stable trail after {} iterations", stats.iterations)]
    NotConverged {
        stats: SolveStats,
        best: Option<PathResult<F>>,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn oracle_err<F: Scalar>(e: GraphError) -> AcoError<F> {
    match e {
        GraphError::UnknownNode(n) => AcoError::UnknownNode(n),
        GraphError::Unreachable { origin, dest } => AcoError::Unreachable { origin, dest },
        other => AcoError::InvalidParams(other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(
    serialize = "F: Serialize",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct AcoParams<F> {
    pub ants: usize,
    /// Pheromone exponent in the move weight.
    pub alpha: F,
    /// Inverse-cost exponent in the move weight.
    pub beta: F,
    /// Fraction of every trail lost per iteration.
    pub evaporation: F,
    /// Deposited amount is this divided by the walk's cost.
    pub deposit_q: F,
    pub initial_pheromone: F,
    /// Per-walk move cap; `None` resolves to four times the node count.
    pub max_steps: Option<usize>,
    pub max_iterations: u32,
    pub stable_iterations: u32,
    pub seed: u64,
    /// Worker threads for walking ants; results are identical at any count.
    pub workers: usize,
}

impl<F: Scalar> Default for AcoParams<F> {
    fn default() -> Self {
        AcoParams {
            ants: 32,
            alpha: F::one(),
            beta: F::of(2.0),
            evaporation: F::of(0.5),
            deposit_q: F::one(),
            initial_pheromone: F::one(),
            max_steps: None,
            max_iterations: 1000,
            stable_iterations: 10,
            seed: 0,
            workers: 1,
        }
    }
}

impl<F: Scalar> AcoParams<F> {
    pub fn validate(&self) -> Result<(), AcoError<F>> {
        let fail = |msg: String| Err(AcoError::InvalidParams(msg));
        if self.ants == 0 {
            return fail("ants must be at least 1".into());
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return fail("alpha and beta must be finite".into());
        }
        if !(self.evaporation > F::zero() && self.evaporation < F::one()) {
            return fail(format!("evaporation {} must lie in (0, 1)", self.evaporation));
        }
        if !(self.deposit_q > F::zero()) || !self.deposit_q.is_finite() {
            return fail(format!("deposit_q {} must be positive", self.deposit_q));
        }
        if !(self.initial_pheromone > F::zero()) || !self.initial_pheromone.is_finite() {
            return fail(format!(
                "initial_pheromone {} must be positive",
                self.initial_pheromone
            ));
        }
        if self.max_steps == Some(0) {
            return fail("max_steps must be at least 1".into());
        }
        if self.max_iterations == 0 || self.stable_iterations == 0 {
            return fail("iteration limits must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn resolved_max_steps(&self, g: &RoadGraph<F>) -> usize {
        self.max_steps.unwrap_or(4 * g.node_count())
    }
}

/// Per-edge trail strengths, indexed like the graph's edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneField<F> {
    tau: Vec<F>,
}

impl<F: Scalar> PheromoneField<F> {
    pub fn new(g: &RoadGraph<F>, initial: F) -> Self {
        PheromoneField {
            tau: vec![initial; g.edge_count()],
        }
    }

    pub fn level(&self, edge: usize) -> F {
        self.tau[edge]
    }

    pub fn levels(&self) -> &[F] {
        &self.tau
    }

    pub fn evaporate(&mut self, rate: F) {
        let keep = F::one() - rate;
        for t in &mut self.tau {
            *t *= keep;
        }
    }

    /// Adds `amount` to every listed edge; a repeated edge gains once per
    /// appearance.
    pub fn deposit(&mut self, edges: &[usize], amount: F) {
        for &e in edges {
            self.tau[e] += amount;
        }
    }

    /// All trails finite and non-negative.
    fn check(&self) -> bool {
        self.tau.iter().all(|t| t.is_finite() && *t >= F::zero())
    }
}

struct AntWalk<F> {
    edges: Vec<usize>,
    cost: F,
    reached: bool,
    revisited: bool,
    nodes: Vec<usize>,
}

fn ant_walk<F: Scalar>(
    g: &RoadGraph<F>,
    field: &PheromoneField<F>,
    p: &AcoParams<F>,
    origin: usize,
    dest: usize,
    max_steps: usize,
    tabu: bool,
    rng: &mut impl rand::Rng,
) -> AntWalk<F> {
    let mut seen = vec![false; g.node_count()];
    seen[origin] = true;
    let mut walk = AntWalk {
        edges: Vec::new(),
        cost: F::zero(),
        reached: origin == dest,
        revisited: false,
        nodes: vec![origin],
    };
    let mut at = origin;
    while !walk.reached && walk.edges.len() < max_steps {
        let out = g.out_edges(at);
        let weights: Vec<F> = out
            .iter()
            .map(|&e| {
                let rec = g.edge(e);
                if tabu && seen[rec.to] {
                    F::zero()
                } else {
                    field.level(e).powf(p.alpha) * (F::one() / rec.cost).powf(p.beta)
                }
            })
            .collect();
        let Some(pick) = sample_weighted(&weights, rng) else {
            break;
        };
        let e = out[pick];
        let rec = g.edge(e);
        walk.revisited |= seen[rec.to];
        seen[rec.to] = true;
        walk.edges.push(e);
        walk.cost += rec.cost;
        walk.nodes.push(rec.to);
        at = rec.to;
        walk.reached = at == dest;
    }
    walk
}

/// Deterministic readout: from the origin, repeatedly take the
/// highest-weight edge to an unvisited node (ties to the smaller node id)
/// until the destination. `None` when the walk gets stuck first.
fn greedy_trail_path<F: Scalar>(
    g: &RoadGraph<F>,
    field: &PheromoneField<F>,
    p: &AcoParams<F>,
    origin: usize,
    dest: usize,
) -> Option<(Vec<usize>, F)> {
    let mut seen = vec![false; g.node_count()];
    seen[origin] = true;
    let mut nodes = vec![origin];
    let mut cost = F::zero();
    let mut at = origin;
    while at != dest {
        let mut best: Option<(F, usize, usize)> = None; // (weight, to, edge)
        for &e in g.out_edges(at) {
            let rec = g.edge(e);
            if seen[rec.to] {
                continue;
            }
            let w = field.level(e).powf(p.alpha) * (F::one() / rec.cost).powf(p.beta);
            if !(w > F::zero()) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bw, bt, _)) => w > *bw || (w == *bw && rec.to < *bt),
            };
            if better {
                best = Some((w, rec.to, e));
            }
        }
        let (_, to, e) = best?;
        seen[to] = true;
        nodes.push(to);
        cost += g.edge(e).cost;
        at = to;
    }
    Some((nodes, cost))
}

fn to_path<F: Scalar>(g: &RoadGraph<F>, nodes: &[usize], cost: F) -> PathResult<F> {
    PathResult {
        nodes: nodes.iter().map(|&i| g.node_id(i).clone()).collect(),
        total_cost: cost,
    }
}

/// The finished solve: cheapest complete walk found, run counters, and the
/// final trail field.
#[derive(Debug, Clone, PartialEq)]
pub struct AcoOutcome<F> {
    pub path: PathResult<F>,
    pub stats: SolveStats,
    pub pheromones: PheromoneField<F>,
}

/// Full ant-system solve with the tabu rule on. Identical inputs give
/// bit-identical outcomes at any worker count.
pub fn aco_solve<F: Scalar>(
    g: &RoadGraph<F>,
    origin: &str,
    dest: &str,
    p: &AcoParams<F>,
) -> Result<AcoOutcome<F>, AcoError<F>> {
    p.validate()?;
    let o = g
        .node_index(origin)
        .ok_or_else(|| AcoError::UnknownNode(origin.to_owned()))?;
    dijkstra_shortest_path(g, origin, dest).map_err(oracle_err)?;
    let d = g.node_index(dest).expect("oracle checked dest");
    let mut field = PheromoneField::new(g, p.initial_pheromone);

    let mut stats = SolveStats::default();
    if o == d {
        stats.converged = true;
        return Ok(AcoOutcome {
            path: to_path(g, &[o], F::zero()),
            stats,
            pheromones: field,
        });
    }

    let max_steps = p.resolved_max_steps(g);
    let mut best: Option<PathResult<F>> = None;
    let mut last: Option<Vec<usize>> = None;
    let mut streak = 0u32;
    for iteration in 1..=p.max_iterations {
        let snapshot = &field;
        let walks = run_indexed(p.workers, p.ants, |k| {
            let mut rng = rng_from(substream(p.seed, iteration as u64, k as u64));
            ant_walk(g, snapshot, p, o, d, max_steps, true, &mut rng)
        });
        field.evaporate(p.evaporation);
        stats.launched += p.ants as u64;
        for w in &walks {
            if !w.reached {
                continue;
            }
            stats.completions += 1;
            stats.deposits += 1;
            field.deposit(&w.edges, p.deposit_q / w.cost);
            if best.as_ref().map(|b| w.cost < b.total_cost).unwrap_or(true) {
                best = Some(to_path(g, &w.nodes, w.cost));
            }
        }
        if !field.check() {
            stats.invariant_violations += 1;
        }
        match greedy_trail_path(g, &field, p, o, d) {
            Some((nodes, cost)) => {
                if last.as_deref() == Some(nodes.as_slice()) {
                    streak += 1;
                } else {
                    streak = 1;
                }
                if streak >= p.stable_iterations {
                    stats.iterations = iteration;
                    stats.converged = true;
                    let path = best.unwrap_or_else(|| to_path(g, &nodes, cost));
                    return Ok(AcoOutcome {
                        path,
                        stats,
                        pheromones: field,
                    });
                }
                last = Some(nodes);
            }
            None => {
                streak = 0;
                last = None;
            }
        }
    }
    stats.iterations = p.max_iterations;
    Err(AcoError::NotConverged { stats, best })
}

/// How often unconstrained trail walks loop back on themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclePressure {
    pub walks: u64,
    pub cyclic: u64,
}

impl CyclePressure {
    pub fn fraction(&self) -> f64 {
        if self.walks == 0 {
            0.0
        } else {
            self.cyclic as f64 / self.walks as f64
        }
    }
}

/// Runs exactly `max_iterations` batches with the tabu rule switched off
/// and reports the fraction of walks that revisited a node. Trails still
/// evaporate and successful walks still deposit, so the pressure reflects
/// the dynamics the tabu rule normally hides.
pub fn aco_cycle_pressure<F: Scalar>(
    g: &RoadGraph<F>,
    origin: &str,
    dest: &str,
    p: &AcoParams<F>,
) -> Result<CyclePressure, AcoError<F>> {
    p.validate()?;
    let o = g
        .node_index(origin)
        .ok_or_else(|| AcoError::UnknownNode(origin.to_owned()))?;
    dijkstra_shortest_path(g, origin, dest).map_err(oracle_err)?;
    let d = g.node_index(dest).expect("oracle checked dest");
    let mut field = PheromoneField::new(g, p.initial_pheromone);
    let max_steps = p.resolved_max_steps(g);
    let mut report = CyclePressure { walks: 0, cyclic: 0 };
    for iteration in 1..=p.max_iterations {
        let snapshot = &field;
        let walks = run_indexed(p.workers, p.ants, |k| {
            let mut rng = rng_from(substream(p.seed, iteration as u64, k as u64));
            ant_walk(g, snapshot, p, o, d, max_steps, false, &mut rng)
        });
        field.evaporate(p.evaporation);
        for w in &walks {
            report.walks += 1;
            report.cyclic += w.revisited as u64;
            if w.reached {
                field.deposit(&w.edges, p.deposit_q / w.cost);
            }
        }
    }
    Ok(report)
}
