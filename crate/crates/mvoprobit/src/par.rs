//! Thin indirection over rayon so the crate builds (and produces identical
//! results) with the `parallel` feature disabled, e.g. on wasm targets.
//!
//! All callers fill pre-sized buffers by index, so the reduction order never
//! depends on the thread count.

#[cfg(feature = "parallel")]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Fixed-shape pairwise summation. The split points depend only on the slice
/// length, so the result is bit-for-bit reproducible and concatenating a
/// slice with itself doubles the sum exactly.
pub fn tree_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        let mut acc = 0.0;
        for v in values {
            acc += *v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}
