//! Pairwise (tree) summation with a fixed leaf size.
//!
//! The split points depend only on the slice length, so the result is
//! identical no matter how the caller schedules the work.

const LEAF: usize = 64;

/// Pairwise sum of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = split_point(values.len());
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..len`, without materialising the terms.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        let len = hi - lo;
        if len <= LEAF {
            return (lo..hi).fold(0.0, |acc, i| acc + f(i));
        }
        let mid = lo + split_point(len);
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, len, f)
}

// Leaf-aligned midpoint so that leaves always hold whole blocks.
fn split_point(len: usize) -> usize {
    let blocks = len.div_ceil(LEAF);
    (blocks / 2).max(1) * LEAF
}
