//! Fixed-shape pairwise reduction of per-ray policy contributions.
//!
//! The index range is split at its midpoint until a span holds at most
//! [`LEAF_SIZE`] items, which are folded left to right. The tree shape depends
//! only on the item count, so the sequential and parallel variants produce
//! bitwise-identical sums for any worker count.

use crate::rmp::PolicySum;

pub const LEAF_SIZE: usize = 32;

/// Spans at or below this size are reduced on the calling thread.
const PARALLEL_GRAIN: usize = 512;

fn fold_leaf<F>(lo: usize, hi: usize, item: &F) -> PolicySum
where
    F: Fn(usize) -> Option<PolicySum>,
{
    let mut acc = PolicySum::ZERO;
    for i in lo..hi {
        if let Some(s) = item(i) {
            acc += s;
        }
    }
    acc
}

fn reduce_seq<F>(lo: usize, hi: usize, item: &F) -> PolicySum
where
    F: Fn(usize) -> Option<PolicySum>,
{
    if hi - lo <= LEAF_SIZE {
        return fold_leaf(lo, hi, item);
    }
    let mid = lo + (hi - lo) / 2;
    reduce_seq(lo, mid, item) + reduce_seq(mid, hi, item)
}

fn reduce_par<F>(lo: usize, hi: usize, item: &F) -> PolicySum
where
    F: Fn(usize) -> Option<PolicySum> + Sync,
{
    if hi - lo <= PARALLEL_GRAIN {
        return reduce_seq(lo, hi, item);
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(|| reduce_par(lo, mid, item), || reduce_par(mid, hi, item));
    a + b
}

/// Sums `item(0..n)` on the calling thread. `None` items contribute nothing.
pub fn tree_reduce_seq<F>(n: usize, item: F) -> PolicySum
where
    F: Fn(usize) -> Option<PolicySum>,
{
    reduce_seq(0, n, &item)
}

/// Same sum as [`tree_reduce_seq`], evaluated on the current rayon pool.
pub fn tree_reduce_par<F>(n: usize, item: F) -> PolicySum
where
    F: Fn(usize) -> Option<PolicySum> + Sync,
{
    reduce_par(0, n, &item)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmp::{Mat3, Vec3};

    fn item(i: usize) -> Option<PolicySum> {
        if i % 7 == 3 {
            return None;
        }
        let x = (i as f64 * 0.37).sin();
        Some(PolicySum {
            metric: Mat3::from_diagonal_element(x * x + 1e-3 * i as f64),
            weighted_accel: Vec3::new(x, 1.0 / (1.0 + i as f64), x.cos()),
        })
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        for n in [0, 1, 31, 32, 33, 1000, 4099] {
            let s = tree_reduce_seq(n, item);
            let p = tree_reduce_par(n, item);
            assert_eq!(s, p, "n = {n}");
        }
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let n = 20_000;
        let reference = tree_reduce_seq(n, item);
        for workers in [1, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            let got = pool.install(|| tree_reduce_par(n, item));
            assert_eq!(got, reference, "workers = {workers}");
        }
    }

    #[test]
    fn skipped_items_contribute_nothing() {
        let s = tree_reduce_seq(10, |_| None);
        assert_eq!(s, PolicySum::ZERO);
    }
}
