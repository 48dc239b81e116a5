//! Reference solvers the landscape solver is measured against: a classical
//! pheromone-trail ant system and a plain uniform random walk.

pub mod aco;
pub mod walk;

pub use aco::{aco_cycle_pressure, aco_solve, AcoError, AcoOutcome, AcoParams, PheromoneField};
pub use walk::{random_walk, random_walk_solve, WalkError, WalkOutcome, WalkParams, WalkStats};

use crate::scalar::Scalar;
use rand::Rng;

/// Samples an index proportionally to `weights`; `None` when no weight is
/// positive. Scans cumulative sums so equal inputs pick equal indices on
/// every platform.
pub(crate) fn sample_weighted<F: Scalar, R: Rng>(weights: &[F], rng: &mut R) -> Option<usize> {
    let total: F = weights.iter().copied().sum();
    if !(total > F::zero()) {
        return None;
    }
    let u = F::of(rng.gen::<f64>()) * total;
    let mut cum = F::zero();
    let mut chosen = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > F::zero() {
            cum += w;
            chosen = Some(i);
            if u < cum {
                break;
            }
        }
    }
    chosen
}
