//! Deterministic summation for Monte-Carlo averages.
//!
//! Sample averages here must be bit-reproducible regardless of how many
//! worker threads evaluate them, so samples are cut into fixed blocks, each
//! block is summed with pairwise (tree) reduction, and the block partials are
//! combined in a tree order keyed by block index. Pairwise summation keeps
//! the accumulated rounding error at O(log n) terms instead of O(n).

use rayon::prelude::*;

/// Samples per reduction block. Fixed so the reduction tree never depends on
/// thread count.
pub(crate) const BLOCK: usize = 256;

/// Pairwise (tree) sum of a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Deterministic sample average of a vector-valued per-sample statistic.
///
/// `init` builds per-block scratch state (scenario buffers), `eval` writes
/// the `width` statistic values for one sample. Blocks may run on any number
/// of rayon workers; the result is bitwise identical either way.
pub(crate) fn sample_mean<S, I, F>(n_samples: usize, width: usize, init: I, eval: F) -> Vec<f64>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, usize, &mut [f64]) + Sync,
{
    assert!(n_samples > 0 && width > 0);
    let n_blocks = n_samples.div_ceil(BLOCK);
    let run_block = |b: usize| -> Vec<f64> {
        let lo = b * BLOCK;
        let hi = ((b + 1) * BLOCK).min(n_samples);
        let mut state = init();
        let mut row = vec![0.0; width];
        // Column-major per-term buffers so each term gets its own tree.
        let mut cols = vec![0.0; width * (hi - lo)];
        for j in lo..hi {
            row.fill(0.0);
            eval(&mut state, j, &mut row);
            for (k, v) in row.iter().enumerate() {
                cols[k * (hi - lo) + (j - lo)] = *v;
            }
        }
        (0..width)
            .map(|k| pairwise_sum(&cols[k * (hi - lo)..(k + 1) * (hi - lo)]))
            .collect()
    };
    // A lone block gains nothing from fan-out; the summation tree (and so
    // the result bits) is the same either way.
    let partials: Vec<Vec<f64>> = if n_blocks == 1 {
        vec![run_block(0)]
    } else {
        (0..n_blocks).into_par_iter().map(run_block).collect()
    };

    let mut scratch = vec![0.0; n_blocks];
    (0..width)
        .map(|k| {
            for (b, p) in partials.iter().enumerate() {
                scratch[b] = p[k];
            }
            pairwise_sum(&scratch) / n_samples as f64
        })
        .collect()
}
