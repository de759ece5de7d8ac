//! Path-parallel execution hook.
//!
//! Paths are cut into fixed-size chunks independent of the worker count.
//! Each chunk is reduced on its own and chunk results come back in chunk
//! order, so merged sums are bit-identical however chunks are scheduled.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::Result;

/// Paths per chunk.
pub const CHUNK_PATHS: u64 = 1024;

pub trait PathExecutor: Sync {
    /// Evaluates `f(0..chunks)` and returns the results in index order.
    fn map_chunks<T, F>(&self, chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs chunks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PathExecutor for Sequential {
    fn map_chunks<T, F>(&self, chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..chunks).map(f).collect()
    }
}

pub(crate) fn chunk_count(paths: u64) -> usize {
    paths.div_ceil(CHUNK_PATHS) as usize
}

pub(crate) fn chunk_range(chunk: usize, paths: u64) -> Range<u64> {
    let start = chunk as u64 * CHUNK_PATHS;
    start..(start + CHUNK_PATHS).min(paths)
}

/// Maps every chunk of `0..paths` through `f`, failing on the first error in
/// chunk order.
pub fn run_chunked<E, T, F>(exec: &E, paths: u64, f: F) -> Result<Vec<T>>
where
    E: PathExecutor + ?Sized,
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    exec.map_chunks(chunk_count(paths), |c| f(chunk_range(c, paths)))
        .into_iter()
        .collect()
}
