//! Independent simulations run side by side.
//!
//! With the `parallel` feature (default) work is spread over rayon's pool;
//! without it every helper degrades to a plain sequential loop. Results keep
//! input order either way, and since each run is deterministic the two paths
//! return identical values.

use crate::error::Fault;
use crate::scenario::{self, RunConfig, RunOutput, ScenarioScript};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[derive(Debug, Clone)]
pub struct Job {
    pub script: ScenarioScript,
    pub config: RunConfig,
}

pub fn run_batch(jobs: &[Job]) -> Vec<Result<RunOutput, Fault>> {
    map(jobs, |j| scenario::run_scenario(&j.script, &j.config))
}

pub fn run_batch_sequential(jobs: &[Job]) -> Vec<Result<RunOutput, Fault>> {
    map_sequential(jobs, |j| scenario::run_scenario(&j.script, &j.config))
}
