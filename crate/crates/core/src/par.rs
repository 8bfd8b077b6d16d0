//! Data-parallel helpers with a sequential fallback when the `parallel`
//! feature is off. Both paths return results in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Smallest index in `0..n` satisfying `pred`, matching a sequential scan.
pub(crate) fn find_first<F>(n: u64, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().find_first(|&i| pred(i))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).find(|&i| pred(i))
    }
}
