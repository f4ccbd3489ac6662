//! Data-parallel map helpers. With the `parallel` feature the work is
//! spread over a rayon pool; without it the same loops run sequentially.
//! Results are always collected in index order, so aggregation downstream
//! is independent of the execution schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_indices<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

pub(crate) fn map_indices_serial<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
