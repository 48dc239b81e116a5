//! Water-drop landscape solver.
//!
//! The graph is given an altitude landscape: every node starts at a common
//! initial altitude except the destination, which is pinned at zero and acts
//! as a sink. Each iteration launches a batch of drops at the origin. A drop
//! moves along outgoing edges with probability proportional to the downhill
//! gradient (altitude difference over edge cost), erodes the node it leaves
//! in proportion to that gradient, and dies when it reaches the destination,
//! runs out of steps, or gets stuck. The sink itself exerts no pull: an edge
//! straight into it is taken with only the small flat-exploration weight,
//! while the erosion of that final plunge reflects the full altitude drop.
//! Drops that stumble in therefore carve steep slopes into the sink's rim,
//! and those carved slopes, not the sink, are what draw later drops. A stuck
//! drop — every outgoing neighbour strictly higher — deposits sediment,
//! raising its node toward the lowest neighbour so later drops are not
//! caught in the same blind alley. All altitude changes from one iteration
//! are summed and applied at a single end-of-iteration barrier, in drop
//! order, which keeps results identical no matter how many worker threads
//! advanced the drops.
//!
//! Erosion concentrates on heavily used steep edges, carving a valley along
//! cheap routes: over a fixed endpoint pair the altitude difference is
//! fixed, so a lower-cost route has the steeper mean gradient and attracts
//! ever more flow. The answer is read off by walking the steepest strictly
//! descending edges from the origin; the solver stops once that walk yields
//! the same path for a configured number of consecutive iterations.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{dijkstra_shortest_path, GraphError, PathResult, RoadGraph};
use crate::parallel::run_indexed;
use crate::rng::{rng_from, substream};
use crate::scalar::Scalar;
use crate::stats::SolveStats;

#[derive(Debug, Error)]
pub enum RfdError<F: Scalar> {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no path from '{origin}' to '{dest}'")]
    Unreachable { origin: String, dest: String },
    #[error("no stable path after {} iterations", stats.iterations)]
    NotConverged {
        stats: SolveStats,
        last_path: Option<PathResult<F>>,
    },
    #[error("no strictly downhill edge out of '{0}'")]
    NoDescent(String),
    #[error("node '{0}' is not blocked: sediment needs every outgoing neighbour strictly higher")]
    NotBlocked(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn oracle_err<F: Scalar>(e: GraphError) -> RfdError<F> {
    match e {
        GraphError::UnknownNode(n) => RfdError::UnknownNode(n),
        GraphError::Unreachable { origin, dest } => RfdError::Unreachable { origin, dest },
        other => RfdError::InvalidParams(other.to_string()),
    }
}

/// Tuning for the landscape solver. `max_steps: None` resolves to four times
/// the node count at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(
    serialize = "F: Serialize",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct RfdParams<F> {
    /// Starting altitude of every non-destination node.
    pub initial_altitude: F,
    /// Fraction of the traversal weight removed from a departed node.
    pub erosion_rate: F,
    /// Numerator of the weight given to flat moves (divided by edge cost).
    pub flat_weight: F,
    /// Fraction of the gap to the lowest neighbour refilled by one deposit.
    pub deposit_rate: F,
    pub drops_per_iteration: usize,
    pub max_steps: Option<usize>,
    pub max_iterations: u32,
    /// Consecutive identical extracted paths required to declare convergence.
    pub stable_iterations: u32,
    /// Altitude floor for non-destination nodes (keeps gradients defined).
    pub min_altitude: F,
    /// Gradients within this of zero count as flat.
    pub flat_tolerance: F,
    pub seed: u64,
    /// Worker threads for advancing drops; results are identical at any count.
    pub workers: usize,
}

impl<F: Scalar> Default for RfdParams<F> {
    fn default() -> Self {
        RfdParams {
            initial_altitude: F::of(100.0),
            erosion_rate: F::of(0.01),
            flat_weight: F::of(0.1),
            deposit_rate: F::of(1.0),
            drops_per_iteration: 32,
            max_steps: None,
            max_iterations: 1000,
            stable_iterations: 10,
            min_altitude: F::of(1e-6),
            flat_tolerance: F::of(1e-9),
            seed: 0,
            workers: 1,
        }
    }
}

impl<F: Scalar> RfdParams<F> {
    pub fn validate(&self) -> Result<(), RfdError<F>> {
        let fail = |msg: String| Err(RfdError::InvalidParams(msg));
        if !(self.initial_altitude > F::zero()) || !self.initial_altitude.is_finite() {
            return fail(format!("initial_altitude {} must be positive", self.initial_altitude));
        }
        if !(self.erosion_rate > F::zero() && self.erosion_rate <= F::one()) {
            return fail(format!("erosion_rate {} must lie in (0, 1]", self.erosion_rate));
        }
        if !(self.flat_weight > F::zero()) || !self.flat_weight.is_finite() {
            return fail(format!("flat_weight {} must be positive", self.flat_weight));
        }
        if !(self.deposit_rate > F::zero() && self.deposit_rate <= F::one()) {
            return fail(format!("deposit_rate {} must lie in (0, 1]", self.deposit_rate));
        }
        if self.drops_per_iteration == 0 {
            return fail("drops_per_iteration must be at least 1".into());
        }
        if self.max_steps == Some(0) {
            return fail("max_steps must be at least 1".into());
        }
        if self.max_iterations == 0 || self.stable_iterations == 0 {
            return fail("iteration limits must be at least 1".into());
        }
        if !(self.min_altitude > F::zero() && self.min_altitude < self.initial_altitude) {
            return fail(format!(
                "min_altitude {} must lie in (0, initial_altitude)",
                self.min_altitude
            ));
        }
        if !(self.flat_tolerance >= F::zero()) || !self.flat_tolerance.is_finite() {
            return fail(format!("flat_tolerance {} must be non-negative", self.flat_tolerance));
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

/// Per-node altitudes with the destination pinned at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape<F> {
    altitudes: Vec<F>,
    destination: usize,
}

impl<F: Scalar> Landscape<F> {
    /// Fresh flat landscape for driving iterations by hand: every node at
    /// the initial altitude, the destination pinned at zero.
    pub fn new(node_count: usize, destination: usize, p: &RfdParams<F>) -> Self {
        let mut altitudes = vec![p.initial_altitude; node_count];
        altitudes[destination] = F::zero();
        Landscape {
            altitudes,
            destination,
        }
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn altitude(&self, node: usize) -> F {
        self.altitudes[node]
    }

    pub fn altitudes(&self) -> &[F] {
        &self.altitudes
    }

    /// Sums the iteration's deltas into the landscape, then clamps every
    /// non-destination altitude into `[min_altitude, initial_altitude]`.
    fn apply_barrier(&mut self, deltas: &[ErosionDelta<F>], p: &RfdParams<F>) {
        for d in deltas {
            debug_assert_ne!(d.node, self.destination, "destination never receives deltas");
            self.altitudes[d.node] += d.delta;
        }
        for (i, a) in self.altitudes.iter_mut().enumerate() {
            if i != self.destination {
                *a = (*a).max(p.min_altitude).min(p.initial_altitude);
            }
        }
        self.altitudes[self.destination] = F::zero();
    }

    /// True when the destination sits at zero and every other altitude lies
    /// inside `[min_altitude, initial_altitude]`.
    pub fn check_invariants(&self, p: &RfdParams<F>) -> bool {
        self.altitudes.iter().enumerate().all(|(i, &a)| {
            if i == self.destination {
                a == F::zero()
            } else {
                a >= p.min_altitude && a <= p.initial_altitude
            }
        })
    }
}

/// Builds the starting landscape for a destination node.
pub fn init_landscape<F: Scalar>(
    g: &RoadGraph<F>,
    dest: &str,
    p: &RfdParams<F>,
) -> Result<Landscape<F>, RfdError<F>> {
    let d = g
        .node_index(dest)
        .ok_or_else(|| RfdError::UnknownNode(dest.to_owned()))?;
    Ok(Landscape::new(g.node_count(), d, p))
}

/// One drop: current node, visited sequence, and whether it is still moving.
#[derive(Debug, Clone)]
pub struct WaterDrop {
    pub at: usize,
    pub path: Vec<usize>,
    pub alive: bool,
}

impl WaterDrop {
    pub fn unleash(origin: usize) -> Self {
        WaterDrop {
            at: origin,
            path: vec![origin],
            alive: true,
        }
    }

    fn previous(&self) -> Option<usize> {
        (self.path.len() >= 2).then(|| self.path[self.path.len() - 2])
    }
}

/// A pending altitude change, applied at the iteration barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErosionDelta<F> {
    pub node: usize,
    pub delta: F,
}

/// What one call to [`advance_drop`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropFate<F> {
    /// Stepped to a non-destination node; still alive.
    Moved,
    /// Reached the destination.
    Completed,
    /// Stuck with every outgoing neighbour strictly higher; sediment
    /// deposited (`min_neighbor` is the lowest neighbouring altitude seen).
    Blocked { min_neighbor: F },
    /// Out of steps, or stranded on a node with no outgoing edges.
    Died,
}

/// Per-edge move weights for a drop sitting at `d.at`:
/// gradient for downhill edges, `flat_weight / cost` for flat ones, zero
/// uphill. Edges straight into the destination also carry the flat weight:
/// the sink swallows drops that wander onto it but exerts no pull of its
/// own, so the attraction toward it comes only from the slopes that
/// arriving drops carve into its rim. Without that rule the sink's raw
/// gradient (initial altitude over edge cost) dwarfs every exploration
/// weight from the first iteration, the batch piles onto whichever edge
/// touches the sink first, and cheaper multi-edge routes are never carved.
/// The node the drop just came from is zeroed unless it owns the only
/// positive weight, so drops do not immediately backtrack.
pub fn transition_weights<F: Scalar>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    d: &WaterDrop,
    p: &RfdParams<F>,
) -> Vec<(usize, F)> {
    let here = l.altitude(d.at);
    let mut weights: Vec<(usize, F)> = g
        .out_edges(d.at)
        .iter()
        .map(|&e| {
            let rec = g.edge(e);
            let gradient = (here - l.altitude(rec.to)) / rec.cost;
            let w = if rec.to == l.destination() {
                p.flat_weight / rec.cost
            } else if gradient > p.flat_tolerance {
                gradient
            } else if gradient >= -p.flat_tolerance {
                p.flat_weight / rec.cost
            } else {
                F::zero()
            };
            (e, w)
        })
        .collect();
    if let Some(prev) = d.previous() {
        let positives = weights.iter().filter(|(_, w)| *w > F::zero()).count();
        if positives > 1 {
            for (e, w) in weights.iter_mut() {
                if g.edge(*e).to == prev {
                    *w = F::zero();
                }
            }
        }
    }
    weights
}

/// Lowest altitude among a node's outgoing neighbours.
pub fn min_out_neighbor_altitude<F: Scalar>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    node: usize,
) -> Option<F> {
    g.out_edges(node)
        .iter()
        .map(|&e| l.altitude(g.edge(e).to))
        .fold(None, |acc, a| match acc {
            None => Some(a),
            Some(b) => Some(if a < b { a } else { b }),
        })
}

/// Sediment deposit for a blocked node: raises it by `deposit_rate` of the
/// gap to its lowest outgoing neighbour. Errors unless every outgoing
/// neighbour is strictly higher.
pub fn deposit_sediment<F: Scalar>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    node: usize,
    p: &RfdParams<F>,
) -> Result<ErosionDelta<F>, RfdError<F>> {
    if node == l.destination() {
        return Err(RfdError::NotBlocked(g.node_id(node).as_str().to_owned()));
    }
    let min_n = min_out_neighbor_altitude(g, l, node)
        .ok_or_else(|| RfdError::NotBlocked(g.node_id(node).as_str().to_owned()))?;
    if min_n <= l.altitude(node) {
        return Err(RfdError::NotBlocked(g.node_id(node).as_str().to_owned()));
    }
    Ok(ErosionDelta {
        node,
        delta: p.deposit_rate * (min_n - l.altitude(node)),
    })
}

/// Advances a drop by one move against a frozen landscape, pushing any
/// altitude change onto `out`. Erosion charges the departed node
/// `erosion_rate` times the traversed edge's true downhill gradient, or
/// times the flat weight when the move was level. The distinction matters
/// only on the final plunge into the destination, where the move is chosen
/// by the flat weight but the soil carried off reflects the full drop in
/// altitude.
pub fn advance_drop<F: Scalar, R: Rng>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    d: &mut WaterDrop,
    p: &RfdParams<F>,
    max_steps: usize,
    rng: &mut R,
    out: &mut Vec<ErosionDelta<F>>,
) -> DropFate<F> {
    debug_assert!(d.alive, "advance called on a dead drop");
    if d.path.len() - 1 >= max_steps {
        d.alive = false;
        return DropFate::Died;
    }
    let weights = transition_weights(g, l, d, p);
    let total: F = weights.iter().map(|(_, w)| *w).sum();
    if !(total > F::zero()) {
        d.alive = false;
        if g.out_edges(d.at).is_empty() {
            return DropFate::Died;
        }
        let min_neighbor =
            min_out_neighbor_altitude(g, l, d.at).expect("blocked node has neighbours");
        let deposit =
            deposit_sediment(g, l, d.at, p).expect("all-uphill node satisfies deposit contract");
        out.push(deposit);
        return DropFate::Blocked { min_neighbor };
    }

    let u = F::of(rng.gen::<f64>()) * total;
    let mut cum = F::zero();
    let mut chosen = None;
    for &(e, w) in &weights {
        if w > F::zero() {
            cum += w;
            chosen = Some((e, w));
            if u < cum {
                break;
            }
        }
    }
    let (e, w) = chosen.expect("positive total implies a positive weight");
    let rec = g.edge(e);
    let gradient = (l.altitude(d.at) - l.altitude(rec.to)) / rec.cost;
    let slope = if gradient > p.flat_tolerance { gradient } else { w };
    out.push(ErosionDelta {
        node: d.at,
        delta: -(p.erosion_rate * slope),
    });
    let to = g.edge(e).to;
    d.at = to;
    d.path.push(to);
    if to == l.destination() {
        d.alive = false;
        DropFate::Completed
    } else {
        DropFate::Moved
    }
}

/// What one iteration did. `deposits` lists `(node, lowest neighbour
/// altitude at the snapshot)` per deposit event, in drop order.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome<F> {
    pub launched: u64,
    pub completions: u64,
    pub died: u64,
    pub deposits: Vec<(usize, F)>,
}

struct DropRun<F> {
    deltas: Vec<ErosionDelta<F>>,
    completed: bool,
    died: bool,
    deposit: Option<(usize, F)>,
}

/// Launches a batch of drops against a frozen snapshot of the landscape and
/// applies all resulting deltas at the end-of-iteration barrier, in
/// `(drop index, emission order)`. Each drop draws from its own RNG
/// substream keyed by `(seed, iteration, drop index)`, so the outcome is
/// independent of the worker count.
pub fn run_iteration<F: Scalar>(
    g: &RoadGraph<F>,
    l: &mut Landscape<F>,
    origin: usize,
    p: &RfdParams<F>,
    iteration: u32,
) -> IterationOutcome<F> {
    let max_steps = p.resolved_max_steps(g);
    let snapshot = &*l;
    let runs: Vec<DropRun<F>> = run_indexed(p.workers, p.drops_per_iteration, |k| {
        let mut drop = WaterDrop::unleash(origin);
        let mut deltas = Vec::new();
        let mut completed = false;
        let mut died = false;
        let mut deposit = None;
        if origin == snapshot.destination() {
            completed = true;
        } else {
            let mut rng = rng_from(substream(p.seed, iteration as u64, k as u64));
            loop {
                match advance_drop(g, snapshot, &mut drop, p, max_steps, &mut rng, &mut deltas) {
                    DropFate::Moved => continue,
                    DropFate::Completed => {
                        completed = true;
                        break;
                    }
                    DropFate::Blocked { min_neighbor } => {
                        deposit = Some((drop.at, min_neighbor));
                        break;
                    }
                    DropFate::Died => {
                        died = true;
                        break;
                    }
                }
            }
        }
        DropRun {
            deltas,
            completed,
            died,
            deposit,
        }
    });

    let mut all_deltas = Vec::new();
    let mut outcome = IterationOutcome {
        launched: p.drops_per_iteration as u64,
        completions: 0,
        died: 0,
        deposits: Vec::new(),
    };
    for run in runs {
        all_deltas.extend(run.deltas);
        outcome.completions += run.completed as u64;
        outcome.died += run.died as u64;
        outcome.deposits.extend(run.deposit);
    }
    l.apply_barrier(&all_deltas, p);
    outcome
}

/// Walks the steepest strictly descending edge from `origin` until the
/// destination. Ties go to the smaller node id. Fails with `NoDescent`
/// when some node on the walk has no edge falling faster than
/// `flat_tolerance`.
pub fn extract_steepest_path<F: Scalar>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    origin: usize,
    p: &RfdParams<F>,
) -> Result<PathResult<F>, RfdError<F>> {
    let mut nodes = vec![g.node_id(origin).clone()];
    let mut total = F::zero();
    let mut cur = origin;
    for _ in 0..g.node_count() {
        if cur == l.destination() {
            return Ok(PathResult {
                nodes,
                total_cost: total,
            });
        }
        let here = l.altitude(cur);
        let mut best: Option<(F, usize, F)> = None; // (gradient, to, cost)
        for &e in g.out_edges(cur) {
            let rec = g.edge(e);
            let gradient = (here - l.altitude(rec.to)) / rec.cost;
            if gradient <= p.flat_tolerance {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bg, bt, _)) => gradient > *bg || (gradient == *bg && rec.to < *bt),
            };
            if better {
                best = Some((gradient, rec.to, rec.cost));
            }
        }
        let Some((_, to, cost)) = best else {
            return Err(RfdError::NoDescent(g.node_id(cur).as_str().to_owned()));
        };
        nodes.push(g.node_id(to).clone());
        total += cost;
        cur = to;
    }
    if cur == l.destination() {
        return Ok(PathResult {
            nodes,
            total_cost: total,
        });
    }
    // Strict descent cannot revisit a node, so a walk longer than the node
    // count means the altitudes are numerically degenerate.
    Err(RfdError::NoDescent(g.node_id(cur).as_str().to_owned()))
}

/// Absolute gap in the telescoping identity for an extracted path: the
/// cost-weighted mean gradient must equal altitude(origin) / total cost.
pub fn gradient_identity_gap<F: Scalar>(
    g: &RoadGraph<F>,
    l: &Landscape<F>,
    path: &PathResult<F>,
) -> F {
    if path.nodes.len() < 2 {
        return F::zero();
    }
    let idx: Vec<usize> = path
        .nodes
        .iter()
        .map(|id| g.node_index(id.as_str()).expect("path nodes exist"))
        .collect();
    let mut drop_sum = F::zero();
    for w in idx.windows(2) {
        drop_sum += l.altitude(w[0]) - l.altitude(w[1]);
    }
    let mean_gradient = drop_sum / path.total_cost;
    (mean_gradient - l.altitude(idx[0]) / path.total_cost).abs()
}

/// A finished solve: the converged path, run counters, the final landscape,
/// and for every node that ever received sediment the distance between its
/// altitude and its lowest neighbour right after its last deposit.
#[derive(Debug, Clone, PartialEq)]
pub struct RfdOutcome<F> {
    pub path: PathResult<F>,
    pub stats: SolveStats,
    pub landscape: Landscape<F>,
    pub deposit_gaps: BTreeMap<usize, F>,
}

/// Full solve: reachability is oracle-checked up front, then iterations run
/// until the extracted path stays identical for `stable_iterations` in a
/// row. Identical inputs give bit-identical outcomes at any worker count.
pub fn solve<F: Scalar>(
    g: &RoadGraph<F>,
    origin: &str,
    dest: &str,
    p: &RfdParams<F>,
) -> Result<RfdOutcome<F>, RfdError<F>> {
    p.validate()?;
    let o = g
        .node_index(origin)
        .ok_or_else(|| RfdError::UnknownNode(origin.to_owned()))?;
    dijkstra_shortest_path(g, origin, dest).map_err(oracle_err)?;
    let mut l = init_landscape(g, dest, p)?;

    let mut stats = SolveStats::default();
    if o == l.destination() {
        stats.converged = true;
        return Ok(RfdOutcome {
            path: PathResult {
                nodes: vec![g.node_id(o).clone()],
                total_cost: F::zero(),
            },
            stats,
            landscape: l,
            deposit_gaps: BTreeMap::new(),
        });
    }

    let mut gaps = BTreeMap::new();
    let mut last: Option<PathResult<F>> = None;
    let mut streak = 0u32;
    for iteration in 1..=p.max_iterations {
        let outcome = run_iteration(g, &mut l, o, p, iteration);
        stats.launched += outcome.launched;
        stats.completions += outcome.completions;
        stats.deposits += outcome.deposits.len() as u64;
        for &(node, min_neighbor) in &outcome.deposits {
            gaps.insert(node, l.altitude(node) - min_neighbor);
        }
        if !l.check_invariants(p) {
            stats.invariant_violations += 1;
        }
        match extract_steepest_path(g, &l, o, p) {
            Ok(path) => {
                if last.as_ref().map(|b| b.nodes == path.nodes) == Some(true) {
                    streak += 1;
                } else {
                    streak = 1;
                }
                last = Some(path);
                if streak >= p.stable_iterations {
                    stats.iterations = iteration;
                    stats.converged = true;
                    return Ok(RfdOutcome {
                        path: last.expect("streak implies a path"),
                        stats,
                        landscape: l,
                        deposit_gaps: gaps,
                    });
                }
            }
            Err(_) => {
                streak = 0;
                last = None;
            }
        }
    }
    stats.iterations = p.max_iterations;
    Err(RfdError::NotConverged {
        stats,
        last_path: last,
    })
}
