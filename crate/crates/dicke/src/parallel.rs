//! Thread-pool executor. Results are collected in index order, so output
//! does not depend on the worker count.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use dicke_core::exec::Executor;

use crate::RunError;

pub const THREADS_ENV: &str = "DICKE_THREADS";

pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> Result<Self, RunError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    /// Worker count from `DICKE_THREADS`, else all available cores.
    pub fn from_env() -> Result<Self, RunError> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(text) => match text.trim().parse::<usize>() {
                Ok(n) if n > 0 => n,
                _ => return Err(RunError::Config(format!("{THREADS_ENV} must be a positive integer, got `{text}`"))),
            },
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order() {
        let pool = Pool::new(3).unwrap();
        let out = pool.map(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }
}
