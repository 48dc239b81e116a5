//! Uniform random walk baseline.
//!
//! Walkers step to a uniformly chosen outgoing neighbour until they hit the
//! destination, run out of steps, or strand on a dead end. A successful
//! walk is turned into a simple path by loop erasure (every revisit cuts
//! the loop it closes) and the cheapest erased path across the ensemble is
//! reported. The pre-erasure traces also yield a node-coverage count, which
//! is what makes independent short walkers comparable against one long one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{PathResult, RoadGraph};
use crate::parallel::run_indexed;
use crate::rng::{rng_from, substream};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no walker reached the destination")]
    NotFound { stats: WalkStats },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    pub walkers: usize,
    /// Per-walk move cap; `None` resolves to four times the node count.
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Worker threads; results are identical at any count.
    pub workers: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walkers: 32,
            max_steps: None,
            seed: 0,
            workers: 1,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<(), WalkError> {
        if self.walkers == 0 {
            return Err(WalkError::InvalidParams("walkers must be at least 1".into()));
        }
        if self.max_steps == Some(0) {
            return Err(WalkError::InvalidParams("max_steps must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(WalkError::InvalidParams("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_max_steps<F: Scalar>(&self, g: &RoadGraph<F>) -> usize {
        self.max_steps.unwrap_or(4 * g.node_count())
    }
}

/// A raw walk trace: visited nodes in order, pre-erasure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTrace {
    pub nodes: Vec<usize>,
    pub reached: bool,
}

/// One uniform walk from `origin`, stopping at `dest`, a dead end, or the
/// step cap.
pub fn random_walk<F: Scalar>(
    g: &RoadGraph<F>,
    origin: usize,
    dest: usize,
    max_steps: usize,
    rng: &mut impl rand::Rng,
) -> WalkTrace {
    let mut nodes = vec![origin];
    let mut at = origin;
    for _ in 0..max_steps {
        if at == dest {
            break;
        }
        let out = g.out_edges(at);
        if out.is_empty() {
            break;
        }
        let e = out[rng.gen_range(0..out.len())];
        at = g.edge(e).to;
        nodes.push(at);
    }
    WalkTrace {
        reached: at == dest,
        nodes,
    }
}

/// Cuts every loop a trace closes: revisiting a node discards the walk
/// segment since its first visit. Consecutive pairs of the result are
/// always steps the walk actually took, so they map to real edges.
fn loop_erase(trace: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut pos: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for &n in trace {
        if let Some(&k) = pos.get(&n) {
            for dropped in out.drain(k + 1..) {
                pos.remove(&dropped);
            }
        } else {
            pos.insert(n, out.len());
            out.push(n);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WalkStats {
    pub walkers: u64,
    pub successes: u64,
    /// Distinct nodes touched by any walker, pre-erasure.
    pub distinct_nodes: u64,
    /// Total moves taken across the ensemble.
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome<F> {
    pub path: PathResult<F>,
    pub stats: WalkStats,
}

/// Runs the walker ensemble and reports the cheapest loop-erased path.
/// Identical inputs give bit-identical outcomes at any worker count.
pub fn random_walk_solve<F: Scalar>(
    g: &RoadGraph<F>,
    origin: &str,
    dest: &str,
    p: &WalkParams,
) -> Result<WalkOutcome<F>, WalkError> {
    p.validate()?;
    let o = g
        .node_index(origin)
        .ok_or_else(|| WalkError::UnknownNode(origin.to_owned()))?;
    let d = g
        .node_index(dest)
        .ok_or_else(|| WalkError::UnknownNode(dest.to_owned()))?;
    if o == d {
        return Ok(WalkOutcome {
            path: PathResult {
                nodes: vec![g.node_id(o).clone()],
                total_cost: F::zero(),
            },
            stats: WalkStats {
                distinct_nodes: 1,
                ..WalkStats::default()
            },
        });
    }

    let max_steps = p.resolved_max_steps(g);
    let traces = run_indexed(p.workers, p.walkers, |k| {
        let mut rng = rng_from(substream(p.seed, 0, k as u64));
        random_walk(g, o, d, max_steps, &mut rng)
    });

    let mut stats = WalkStats {
        walkers: p.walkers as u64,
        ..WalkStats::default()
    };
    let mut touched = vec![false; g.node_count()];
    let mut best: Option<(Vec<usize>, F)> = None;
    for t in &traces {
        stats.total_steps += (t.nodes.len() - 1) as u64;
        for &n in &t.nodes {
            touched[n] = true;
        }
        if !t.reached {
            continue;
        }
        stats.successes += 1;
        let erased = loop_erase(&t.nodes);
        let cost: F = erased
            .windows(2)
            .map(|w| {
                let e = g
                    .edge_between(w[0], w[1])
                    .expect("erased pairs are walked edges");
                g.edge(e).cost
            })
            .sum();
        if best.as_ref().map(|(_, bc)| cost < *bc).unwrap_or(true) {
            best = Some((erased, cost));
        }
    }
    stats.distinct_nodes = touched.iter().filter(|&&t| t).count() as u64;

    match best {
        Some((nodes, cost)) => Ok(WalkOutcome {
            path: PathResult {
                nodes: nodes.iter().map(|&i| g.node_id(i).clone()).collect(),
                total_cost: cost,
            },
            stats,
        }),
        None => Err(WalkError::NotFound { stats }),
    }
}
