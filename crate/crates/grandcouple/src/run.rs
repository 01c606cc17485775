//! Replicate-level parallelism with scheduling-independent results.

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{config_err, Result};

/// Effective run settings after command-line overrides.
pub struct Context {
    pub seed: u64,
    pub replicates: Option<usize>,
    pub workers: usize,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let workers = cfg.workers();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| config_err(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self {
            seed: cfg.seed,
            replicates: cfg.replicates,
            workers,
            pool,
        })
    }

    pub fn reps(&self, default: usize) -> Result<usize> {
        match self.replicates.unwrap_or(default) {
            0 => Err(config_err("replicates must be >= 1")),
            n => Ok(n),
        }
    }

    /// `f(0), …, f(n − 1)` on the worker pool, collected in index order.
    pub fn par_map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}
