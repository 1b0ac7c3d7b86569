//! Parallel iteration runner.
//!
//! Iterations are independent given `(seed, iteration)`, so they are spread
//! over a rayon pool and collected back in iteration order. Results do not
//! depend on the thread count.

use gridrel_core::engine::EngineError;
use gridrel_core::{IndexReport, IndexSummary, IterationHistory, Simulator};
use rayon::prelude::*;

/// Runs iterations `0..iterations` on `threads` workers (0 = one per core)
/// and maps each history through `f`, preserving order.
pub fn map_iterations<T, F>(sim: &Simulator, threads: usize, f: F) -> Result<Vec<T>, EngineError>
where
    T: Send,
    F: Fn(IterationHistory) -> T + Sync + Send,
{
    let n = sim.config().iterations;
    let run = || {
        (0..n)
            .into_par_iter()
            .map(|i| sim.run_iteration(i).map(&f))
            .collect::<Result<Vec<T>, EngineError>>()
    };
    if threads == 1 {
        return (0..n).map(|i| sim.run_iteration(i).map(&f)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// Index reports of every iteration, in order.
pub fn run_reports(sim: &Simulator, threads: usize) -> Result<Vec<IndexReport>, EngineError> {
    map_iterations(sim, threads, |h| IndexReport::from_history(&h))
}

pub fn summarize(reports: &[IndexReport]) -> IndexSummary {
    let mut s = IndexSummary::new();
    for r in reports {
        s.push(r);
    }
    s
}
