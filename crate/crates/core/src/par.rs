// SPDX-License-Identifier: Apache-2.0
//! Data-parallel helpers. With the `parallel` feature the work runs on
//! rayon; without it (or with `jobs == 1`) everything is sequential. Output
//! order always matches input order.

/// Maps `f` over `0..len`.
pub fn map_indexed<T, F>(len: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..len).map(f).collect()
}

/// Runs `f` with at most `jobs` worker threads (0 = rayon's default).
pub fn with_jobs<T, F>(jobs: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}

pub fn is_parallel_build() -> bool {
    cfg!(feature = "parallel")
}
