//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature (default) these fan out over rayon's global
//! pool; without it they run as plain sequential iterators. Output order is
//! identical in both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f` on `0..n` and collects the results in index order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential counterpart of [`map_indices`], always available.
pub fn map_indices_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// First index in `0..n` for which `f` returns `Some`, with the lowest such index winning.
pub fn find_first<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().find_map_first(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).find_map(f)
    }
}

/// True when built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
