//! Fixed-size worker pools.
//!
//! A pool of one worker runs everything on the calling thread, so serial
//! runs never touch rayon's global pool.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

#[derive(Clone)]
pub struct Workers {
    count: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl fmt::Debug for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Workers").field("count", &self.count).finish()
    }
}

impl Workers {
    /// Pool with `count` workers. A count of zero is treated as one.
    pub fn new(count: usize) -> Result<Self, ThreadPoolBuildError> {
        if count <= 1 {
            return Ok(Self::serial());
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(count)
            .thread_name(|i| format!("tilestencil-{i}"))
            .build()?;
        Ok(Self {
            count,
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn serial() -> Self {
        Self {
            count: 1,
            pool: None,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Runs `f` on every item, in parallel when the pool has several workers.
    pub fn for_each<T, F>(&self, items: Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Send + Sync,
    {
        match &self.pool {
            None => items.into_iter().for_each(f),
            Some(pool) => pool.install(|| items.into_par_iter().for_each(f)),
        }
    }

    /// Applies `f(offset, chunk)` to consecutive chunks of `data`.
    pub fn for_each_chunk<F>(&self, data: &mut [f64], chunk_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Send + Sync,
    {
        let chunk_len = chunk_len.max(1);
        match &self.pool {
            None => data
                .chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(k, c)| f(k * chunk_len, c)),
            Some(pool) => pool.install(|| {
                data.par_chunks_mut(chunk_len)
                    .enumerate()
                    .for_each(|(k, c)| f(k * chunk_len, c))
            }),
        }
    }

    /// Runs `f` inside the pool (or directly for a serial pool).
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            None => f(),
            Some(pool) => pool.install(f),
        }
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::serial()
    }
}
