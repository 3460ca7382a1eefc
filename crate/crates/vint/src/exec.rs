//! Sequential or thread-pooled execution of independent samples.
//!
//! Verification sweeps (random-pair residual checks, per-sample oracles,
//! batched flow evaluations) are embarrassingly parallel: every sample is
//! independent and the result is reduced with order-insensitive operations or
//! collected back in input order. This module provides the one switch point.
//! With the `parallel` feature (default) a [`ExecMode::Parallel`] request
//! fans out over rayon's global pool; without it the request quietly runs
//! sequentially, so callers never need feature guards of their own. Results
//! are collected in input order in both modes, which keeps every downstream
//! artifact byte-deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

/// Whether parallel execution is compiled in.
pub fn parallel_compiled() -> bool {
    cfg!(feature = "parallel")
}

/// Apply `f` to `0..n`, collecting results in index order.
pub fn map_indexed<U, F>(mode: ExecMode, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Apply `f` to each item, collecting results in input order.
pub fn map_items<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    map_indexed(mode, items.len(), |i| f(&items[i]))
}
