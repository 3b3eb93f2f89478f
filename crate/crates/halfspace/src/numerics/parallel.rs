//! Order-preserving parallel helpers.
//!
//! Every parallel reduction in this crate follows the same pattern: the work
//! is cut into batches with a fixed layout, batches are mapped in parallel,
//! and the partial results are combined **sequentially in batch order**. The
//! result is bit-identical for any worker-thread count.

use rayon::prelude::*;

/// Map `f` over `0..n_batches` in parallel, returning results in index order.
pub fn ordered_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n_batches: usize, f: F) -> Vec<T> {
    (0..n_batches).into_par_iter().map(f).collect()
}

/// Deterministic sum of a slice: fixed-size chunks are summed in parallel and
/// the partial sums are folded left-to-right.
pub fn sum_batched(values: &[f64], batch: usize) -> f64 {
    let batch = batch.max(1);
    values
        .par_chunks(batch)
        .map(|chunk| chunk.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}
