//! Order-fixed reductions. Results depend only on the input order, never on
//! how many workers produced the inputs.

use rayon::prelude::*;

const BLOCK: usize = 32;

/// Pairwise (cascade) sum with a fixed split point at every level.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Evaluates `row(i, buf)` for every row in parallel, then reduces the row
/// sums pairwise in index order. `buf` is scratch space reused per worker.
pub fn par_row_sum<F>(rows: usize, row: F) -> f64
where
    F: Fn(usize, &mut Vec<f64>) -> f64 + Sync + Send,
{
    let sums: Vec<f64> = (0..rows)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| row(i, buf))
        .collect();
    pairwise_sum(&sums)
}
