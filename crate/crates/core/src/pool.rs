//! Worker pool for independent Monte Carlo work items.
//!
//! Results always come back in input-index order, so output never depends on
//! the number of workers. Without the `parallel` feature every map runs on
//! the calling thread.

/// Number of worker threads; `0` means "all available cores".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Workers(pub usize);

impl Workers {
    pub const SEQUENTIAL: Workers = Workers(1);

    pub fn all() -> Self {
        Workers(0)
    }
}

/// Applies `f` to `0..n` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, workers: Workers, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers.0 != 1 && n > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.0)
                .build()
                .expect("failed to build worker pool");
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    (0..n).map(f).collect()
}
