use rayon::prelude::*;
use spdv_core::PathExecutor;

use crate::error::LabError;

/// Runs path chunks on a dedicated rayon pool. Results do not depend on the
/// worker count since chunking and merge order are fixed by the engine.
#[derive(Debug)]
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `workers == 0` uses one thread per available core.
    pub fn new(workers: usize) -> Result<Self, LabError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| LabError::Config(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PathExecutor for RayonExecutor {
    fn map_chunks<T, F>(&self, chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..chunks).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_chunk_order() {
        for workers in [1, 3, 8] {
            let exec = RayonExecutor::new(workers).unwrap();
            assert_eq!(exec.workers(), workers);
            let out = exec.map_chunks(1000, |i| i * i);
            assert!(out.iter().enumerate().all(|(i, v)| *v == i * i));
        }
    }
}
