//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper produces bit-identical results in both modes: work is split
//! into fixed chunks whose partial results are combined in index order, so
//! neither the thread count nor the mode changes floating-point summation
//! order. Without the `parallel` feature all paths run sequentially.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Chunk length used by [`chunked_sum`].
pub const SUM_CHUNK: usize = 256;

/// Turns the parallel code paths on or off at runtime. Has no effect when the
/// crate was built without the `parallel` feature.
pub fn set_enabled(on: bool) {
    ENABLED.store(on && cfg!(feature = "parallel"), Ordering::Relaxed);
}

pub fn enabled() -> bool {
    ENABLED.load(Ordering::Relaxed)
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if enabled() && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Maps over a slice, in parallel when enabled.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Send + Sync,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

/// Sum of `term(k)` over `0..n` using fixed chunks of [`SUM_CHUNK`] terms.
///
/// Each chunk is summed left to right and the chunk totals are then added in
/// order, so the result does not depend on scheduling.
pub fn chunked_sum<T, F>(n: usize, zero: T, term: F) -> T
where
    T: Copy + Send + Sync + std::ops::Add<Output = T>,
    F: Fn(usize) -> T + Send + Sync,
{
    let n_chunks = n.div_ceil(SUM_CHUNK);
    let partial = |c: usize| {
        let start = c * SUM_CHUNK;
        let end = (start + SUM_CHUNK).min(n);
        (start..end).fold(zero, |acc, k| acc + term(k))
    };
    let sums = map_indexed(n_chunks, partial);
    sums.into_iter().fold(zero, |acc, s| acc + s)
}

/// Fallible [`chunked_sum`]; the first error in index order is returned.
pub fn try_chunked_sum<T, E, F>(n: usize, zero: T, term: F) -> Result<T, E>
where
    T: Copy + Send + Sync + std::ops::Add<Output = T>,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Send + Sync,
{
    let n_chunks = n.div_ceil(SUM_CHUNK);
    let partial = |c: usize| {
        let start = c * SUM_CHUNK;
        let end = (start + SUM_CHUNK).min(n);
        (start..end).try_fold(zero, |acc, k| Ok(acc + term(k)?))
    };
    map_indexed(n_chunks, partial)
        .into_iter()
        .try_fold(zero, |acc, s| Ok(acc + s?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_mode_independent() {
        let term = |k: usize| (k as f64 * 0.37).sin() * 1e3 + 1e-7 * k as f64;
        set_enabled(true);
        let a = chunked_sum(10_007, 0.0, term);
        set_enabled(false);
        let b = chunked_sum(10_007, 0.0, term);
        set_enabled(true);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
        assert!(map_indexed(0, |i| i).is_empty());
    }
}
