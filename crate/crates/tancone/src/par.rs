//! Ordered data-parallel helpers.
//!
//! `map` preserves input order whichever backend runs it, and `sum`
//! reduces pairwise in a fixed tree, so a parallel run and a sequential
//! run return bit-identical results.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQ: Cell<bool> = const { Cell::new(false) };
}

/// Run `f` with every helper in this module pinned to the sequential path
/// on the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQ.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQ.with(|c| c.set(prev));
    out
}

fn seq_forced() -> bool {
    FORCE_SEQ.with(|c| c.get())
}

/// True when work will actually be spread over threads.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !seq_forced()
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !seq_forced() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !seq_forced() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Pairwise sum with a fixed split, independent of the backend.
pub fn sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    sum(&v[..mid]) + sum(&v[mid..])
}

/// Component-wise pairwise sum of equal-length vectors.
pub fn sum_vecs(v: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let col: Vec<f64> = v.iter().map(|x| x[k]).collect();
            sum(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v: Vec<usize> = (0..1000).collect();
        let out = map(&v, |x| x * 2);
        assert!(out.iter().enumerate().all(|(i, x)| *x == 2 * i));
    }

    #[test]
    fn sequential_matches_parallel_bitwise() {
        let v: Vec<f64> = (0..10_000).map(|i| ((i as f64) * 0.37).sin() / 3.0).collect();
        let a = sum(&map(&v, |x| x * x));
        let b = sequential(|| sum(&map(&v, |x| x * x)));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn flag_restored() {
        sequential(|| assert!(!is_parallel()));
        assert_eq!(is_parallel(), cfg!(feature = "parallel"));
    }
}
