use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Bounded worker pool for independent samples. Results come back in index
/// order, so accumulation does not depend on scheduling.
pub struct Executor {
    pool: ThreadPool,
}

impl Executor {
    /// `workers = 0` uses the available parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `f` on `range`, failing with the first error in index order.
    pub fn map<T, F>(&self, range: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| range.into_par_iter().map(&f).collect::<Vec<Result<T>>>().into_iter().collect())
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(0).expect("default worker pool")
    }
}
