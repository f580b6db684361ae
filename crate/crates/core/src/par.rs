//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) [`map`] fans out over a rayon
//! pool; without it, or with `jobs == 1`, it runs in order on the calling
//! thread. Results always come back in input order.

/// `jobs == 0` means one worker per available core.
pub fn map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs == 1 || items.len() < 2 {
        return sequential(items, f);
    }
    parallel(items, jobs, f)
}

pub fn sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn parallel<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().map(&f).collect();
    if jobs == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            tracing::warn!(error = %e, "cannot build worker pool; using the global one");
            run()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn parallel<T, R, F>(items: &[T], _jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    sequential(items, f)
}

pub fn available() -> bool {
    cfg!(feature = "parallel")
}
