//! Tiny indirection over rayon so the crate builds without it.
//!
//! With the `parallel` feature (the default) `map_collect` fans work out over
//! a rayon pool; without it the same call runs sequentially. Output order is
//! the input order either way, so results are deterministic regardless of
//! scheduling.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    F: Fn(&I) -> T,
{
    items.iter().map(f).collect()
}

/// Sequential version, always available (used by the benches as a baseline).
pub(crate) fn map_collect_seq<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    F: Fn(&I) -> T,
{
    items.iter().map(f).collect()
}
