//! Green-time allocation for fixed-cycle signals.

use super::{SimError, SignalConfig};
use crate::scalar::Scalar;

/// Splits a cycle's effective green time (cycle minus lost time) across
/// approaches in proportion to their queue demands, flooring every
/// approach at the minimum green. Flooring frees or consumes time, so
/// shares are re-proportioned over the unfloored approaches until stable,
/// and the last floating-point residue is folded into the largest
/// unfloored share so the result sums to the effective green exactly.
/// Zero total demand splits evenly.
pub fn adjust_signal_splits<F: Scalar>(
    demands: &[F],
    cfg: &SignalConfig<F>,
    node: &str,
) -> Result<Vec<F>, SimError> {
    let n = demands.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let available = cfg.cycle_s - cfg.lost_time_s;
    if F::of(n as f64) * cfg.min_green_s > available {
        return Err(SimError::InfeasibleCycle {
            node: node.to_owned(),
            approaches: n,
            detail: format!(
                "{} of minimum green into {} of effective cycle",
                F::of(n as f64) * cfg.min_green_s,
                available
            ),
        });
    }

    let total: F = demands.iter().copied().sum();
    let mut greens = vec![F::zero(); n];
    let mut floored = vec![false; n];
    if total > F::zero() {
        // Waterfill: floor the starving approaches, re-share the rest.
        loop {
            let floor_count = floored.iter().filter(|&&f| f).count();
            let free_time = available - F::of(floor_count as f64) * cfg.min_green_s;
            let free_demand: F = demands
                .iter()
                .zip(&floored)
                .filter(|(_, &f)| !f)
                .map(|(&d, _)| d)
                .sum();
            let mut changed = false;
            for i in 0..n {
                if floored[i] {
                    greens[i] = cfg.min_green_s;
                    continue;
                }
                greens[i] = if free_demand > F::zero() {
                    free_time * demands[i] / free_demand
                } else {
                    free_time / F::of((n - floor_count) as f64)
                };
                if greens[i] < cfg.min_green_s {
                    floored[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    } else {
        let share = available / F::of(n as f64);
        greens = vec![share; n];
    }

    // Fold the rounding residue into the largest unfloored share.
    let sum: F = greens.iter().copied().sum();
    let residue = available - sum;
    if residue != F::zero() {
        let target = (0..n)
            .filter(|&i| !floored[i])
            .max_by(|&a, &b| greens[a].partial_cmp(&greens[b]).expect("greens are finite"))
            .unwrap_or(0);
        greens[target] += residue;
    }
    Ok(greens)
}
