//! Realization-level parallelism.
//!
//! With the `parallel` feature (default) realizations run on the rayon pool;
//! without it they run in a plain loop. Both paths return results in
//! realization-index order so downstream reductions are identical.

/// Evaluate `job(i)` for `i in 0..count`, in parallel when enabled.
pub fn map_realizations<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_realizations_sequential(count, job)
    }
}

/// Always-sequential variant, used as the reference path and in benches.
pub fn map_realizations_sequential<T, F>(count: usize, job: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(job).collect()
}

/// Run `f` with at most `workers` threads (0 = library default).
///
/// Without the `parallel` feature this simply calls `f`.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
