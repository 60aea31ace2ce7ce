//! Deterministic data-parallel helpers.
//!
//! With the `parallel` feature the closures run on the rayon pool, otherwise
//! sequentially. Results always come back in index order and floating-point
//! reductions go through [`pairwise_sum`] over those ordered partials, so the
//! value of every reduction is independent of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(i)` for `i in 0..n`, returning the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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

/// Run `f(chunk_index, chunk)` over consecutive `chunk_len`-sized pieces of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Sum `f(i)` over `i in 0..n` by computing every term (possibly in
/// parallel) and reducing them with a fixed binary tree.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&map_indexed(n, f))
}

/// Integer sum of `f(i)`; exact, so order does not matter.
pub fn count_indexed<F>(n: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).sum()
    }
}

const PAIRWISE_BASE: usize = 16;

/// Pairwise (tree) summation. The split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
