//! Execution layer: data-parallel map with a sequential fallback.
//!
//! Every fan-out in the crate (quadrature shells, angular nodes, MC sample
//! blocks, experiment grids) goes through [`par_map`] and is reduced with
//! [`pairwise_sum`]. Parallel results are collected in index order, so the
//! floating-point result is identical whether the `parallel` feature is on,
//! off, or running on any number of threads.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    // Small batches are not worth the scheduling overhead.
    if n < 4 {
        return (0..n).map(f).collect();
    }
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sum in a fixed pairwise (balanced-tree) order.
///
/// Pairwise summation has O(log n) roundoff growth and, unlike sequential
/// accumulation into one register, the tree shape depends only on the slice
/// length, so the result is reproducible and independent of chunking.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// `Σ w_i · v_i` in fixed pairwise order.
pub fn pairwise_dot(ws: &[f64], vs: &[f64]) -> f64 {
    debug_assert_eq!(ws.len(), vs.len());
    let prods: Vec<f64> = ws.iter().zip(vs).map(|(w, v)| w * v).collect();
    pairwise_sum(&prods)
}
