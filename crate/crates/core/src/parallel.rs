//! Worker-pool fan-out whose results never depend on the worker count:
//! jobs are indexed, each job derives all randomness from its index, and
//! results come back in index order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::{ThreadPool, ThreadPoolBuilder};

fn pool(workers: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = pools.lock().expect("pool registry lock");
    guard
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("worker pool"),
            )
        })
        .clone()
}

/// Runs `count` jobs and returns their results in index order.
/// `workers <= 1` runs inline on the current thread; larger values use a
/// cached pool of that size. Output is identical either way.
pub fn run_indexed<T, J>(workers: usize, count: usize, job: J) -> Vec<T>
where
    T: Send,
    J: Fn(usize) -> T + Sync,
{
    if workers <= 1 || count <= 1 {
        (0..count).map(job).collect()
    } else {
        pool(workers).install(|| {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(|i| job(i)).collect()
        })
    }
}
