//! Exact brute-force nearest-neighbor kernels.
//!
//! Queries are processed in parallel blocks; each query's reduction over the
//! reference rows is sequential and in row order, so results do not depend
//! on the number of worker threads.

use std::borrow::Cow;

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;

const QUERY_BLOCK: usize = 32;
const REF_BLOCK: usize = 256;

#[inline]
pub fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        _ => a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum(),
    }
}

const PRUNE_STRIDE: usize = 8;
const LANES: usize = 4;

/// Squared distances from `q` to four rows at once. Each sum runs in the same
/// order as [`squared_distance`], so every finite result is identical to it.
/// Once all four partial sums reach `bound` the scan stops and every entry is
/// infinite.
#[inline]
fn four_below(q: &[f64], r: [&[f64]; LANES], bound: f64) -> [f64; LANES] {
    let mut acc = [0.0; LANES];
    let mut j = 0;
    while j < q.len() {
        let end = (j + PRUNE_STRIDE).min(q.len());
        for d in j..end {
            let x = q[d];
            for k in 0..LANES {
                let t = x - r[k][d];
                acc[k] += t * t;
            }
        }
        if acc.iter().all(|&v| v >= bound) {
            return [f64::INFINITY; LANES];
        }
        j = end;
    }
    acc
}

/// Calls `visit(row, squared_distance)` for rows `start..end` of `refs` in
/// order. `visit` returns the new bound; rows that cannot beat it may be
/// reported as infinite.
fn scan_rows(
    query: &[f64],
    refs: &[f64],
    (start, end): (usize, usize),
    mut bound: f64,
    mut visit: impl FnMut(usize, f64) -> f64,
) {
    let width = query.len();
    let row = |i: usize| &refs[i * width..(i + 1) * width];
    let mut r = start;
    while r + LANES <= end {
        let d = four_below(query, [row(r), row(r + 1), row(r + 2), row(r + 3)], bound);
        for (k, dk) in d.into_iter().enumerate() {
            bound = visit(r + k, dk);
        }
        r += LANES;
    }
    for i in r..end {
        visit(i, squared_distance(ArrayView1::from(query), ArrayView1::from(row(i))));
    }
}

fn contiguous<'a>(m: &ArrayView2<'a, f64>) -> Cow<'a, [f64]> {
    match m.to_slice() {
        Some(s) => Cow::Borrowed(s),
        None => Cow::Owned(m.iter().copied().collect()),
    }
}

/// Euclidean distance from every query row to its closest reference row.
///
/// Panics if `refs` is empty or dimensions differ; callers validate first.
pub fn nearest_distances(queries: ArrayView2<f64>, refs: ArrayView2<f64>) -> Vec<f64> {
    assert!(refs.nrows() > 0, "reference set is empty");
    assert_eq!(queries.ncols(), refs.ncols(), "dimension mismatch");
    let width = refs.ncols();
    let (qs, rs) = (contiguous(&queries), contiguous(&refs));
    let mut out = vec![f64::INFINITY; queries.nrows()];
    out.par_chunks_mut(QUERY_BLOCK)
        .enumerate()
        .for_each(|(block, best)| {
            let start = block * QUERY_BLOCK;
            for ref_start in (0..refs.nrows()).step_by(REF_BLOCK) {
                let ref_end = (ref_start + REF_BLOCK).min(refs.nrows());
                for (q, slot) in best.iter_mut().enumerate() {
                    let query = &qs[(start + q) * width..(start + q + 1) * width];
                    scan_rows(query, &rs, (ref_start, ref_end), *slot, |_, d| {
                        if d < *slot {
                            *slot = d;
                        }
                        *slot
                    });
                }
            }
        });
    out.iter_mut().for_each(|d| *d = d.sqrt());
    out
}

/// Euclidean distance from each row to its `k`-th nearest *other* row of the
/// same matrix (k = 1 is the nearest neighbor).
///
/// Panics unless `1 <= k < points.nrows()`.
pub fn kth_neighbor_distances(points: ArrayView2<f64>, k: usize) -> Vec<f64> {
    let n = points.nrows();
    assert!(k >= 1 && k < n, "need 1 <= k < n");
    let width = points.ncols();
    let ps = contiguous(&points);
    let kth = |heap: &Vec<f64>| if heap.len() < k { f64::INFINITY } else { heap[k - 1] };
    let mut out = vec![0.0; n];
    out.par_chunks_mut(QUERY_BLOCK)
        .enumerate()
        .for_each(|(block, res)| {
            let start = block * QUERY_BLOCK;
            // k smallest squared distances per query, ascending.
            let mut best: Vec<Vec<f64>> = vec![Vec::with_capacity(k + 1); res.len()];
            for ref_start in (0..n).step_by(REF_BLOCK) {
                let ref_end = (ref_start + REF_BLOCK).min(n);
                for (q, heap) in best.iter_mut().enumerate() {
                    let qi = start + q;
                    let query = &ps[qi * width..(qi + 1) * width];
                    scan_rows(query, &ps, (ref_start, ref_end), kth(heap), |r, d| {
                        if r != qi && (heap.len() < k || d < heap[k - 1]) {
                            let pos = heap.partition_point(|&x| x <= d);
                            heap.insert(pos, d);
                            heap.truncate(k);
                        }
                        kth(heap)
                    });
                }
            }
            for (slot, heap) in res.iter_mut().zip(best) {
                *slot = heap[k - 1].sqrt();
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn three_four_five() {
        let q = array![[0.0, 0.0]];
        let r = array![[3.0, 4.0], [6.0, 8.0]];
        assert_eq!(nearest_distances(q.view(), r.view()), vec![5.0]);
    }

    #[test]
    fn matches_naive_scan_exactly() {
        let q = random(200, 8, 1);
        let r = random(333, 8, 2);
        let fast = nearest_distances(q.view(), r.view());
        for (i, got) in fast.iter().enumerate() {
            let mut best = f64::INFINITY;
            for j in 0..r.nrows() {
                let d: f64 = (0..8).map(|c| (q[[i, c]] - r[[j, c]]).powi(2)).sum();
                best = best.min(d.sqrt());
            }
            assert_eq!(*got, best);
        }
    }

    #[test]
    fn kth_neighbor_matches_sorting() {
        let p = random(100, 5, 3);
        for k in [1, 5, 99] {
            let fast = kth_neighbor_distances(p.view(), k);
            for i in 0..100 {
                let mut ds: Vec<f64> = (0..100)
                    .filter(|&j| j != i)
                    .map(|j| squared_distance(p.row(i), p.row(j)).sqrt())
                    .collect();
                ds.sort_by(f64::total_cmp);
                assert_eq!(fast[i], ds[k - 1]);
            }
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let q = random(150, 4, 9);
        let r = random(600, 4, 10);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| nearest_distances(q.view(), r.view()));
        assert_eq!(serial, nearest_distances(q.view(), r.view()));
    }
}
