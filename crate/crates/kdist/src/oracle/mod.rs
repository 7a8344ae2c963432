//! Exact nearest-neighbor ground truth.
//!
//! Everything the learned filter is measured against comes from here: exact
//! kNN queries, the k-distance table, and the brute-force RkNN reference.
//! Two independent routes exist on purpose. [`knn_query`] is a plain linear
//! scan; [`NnIndex`] uses a kd-tree when the dimensionality allows (d <= 3)
//! and must agree with the scan bit for bit, ties included. Ties are broken
//! by ascending point index everywhere.
//!
//! RkNN membership is `dist(q, o) <= nndist(o, k)` with the candidate's own
//! index excluded from its neighborhood. The non-strict comparison matters
//! when the query is itself a database point: q then participates in o's
//! neighborhood and realizes the k-th distance exactly whenever q is o's k-th
//! neighbor, so a strict comparison would empty every such result. On the
//! 1-d set {1, 2, 4} the reverse 1-NN of 2 are {1, 4} while the reverse 1-NN
//! of 4 are empty; both fall out of the non-strict rule.

mod kdtree;

use std::collections::BinaryHeap;

use ndarray::Array2;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::table::KDistTable;
use crate::Real;

/// Max-heap entry ordered by `(distance, index)`. Distances are finite by
/// dataset invariant, so the total order is safe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cand {
    pub d: Real,
    pub idx: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.d
            .partial_cmp(&other.d)
            .expect("finite distances")
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// k nearest neighbors sorted by `(distance, index)` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub indices: Vec<usize>,
    pub distances: Vec<Real>,
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 || k > available {
        return Err(Error::KTooLarge { k, max: available });
    }
    Ok(())
}

fn drain_heap(mut heap: BinaryHeap<Cand>) -> KnnResult {
    let mut cands: Vec<Cand> = Vec::with_capacity(heap.len());
    while let Some(c) = heap.pop() {
        cands.push(c);
    }
    cands.reverse();
    KnnResult {
        indices: cands.iter().map(|c| c.idx).collect(),
        distances: cands.iter().map(|c| c.d).collect(),
    }
}

/// Linear-scan kNN: the reference route. `exclude` lists point indices that
/// may never appear in the result (deduplicated by the caller).
pub fn knn_query(ds: &Dataset, q: &[Real], k: usize, exclude: &[usize]) -> Result<KnnResult> {
    let excluded_in_range = exclude.iter().filter(|&&i| i < ds.n()).count();
    check_k(k, ds.n() - excluded_in_range)?;
    let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
    for i in 0..ds.n() {
        if exclude.contains(&i) {
            continue;
        }
        let cand = Cand {
            d: ds.dist_to(q, i),
            idx: i,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap non-empty") {
            heap.pop();
            heap.push(cand);
        }
    }
    Ok(drain_heap(heap))
}

/// Distance from point `p` to its k-th nearest neighbor, self excluded.
pub fn nndist(ds: &Dataset, p: usize, k: usize) -> Result<Real> {
    let res = knn_query(ds, ds.point(p), k, &[p])?;
    Ok(res.distances[k - 1])
}

/// Accelerated exact search: kd-tree for d <= 3, linear scan otherwise.
/// Results are identical to [`knn_query`] in all cases.
pub struct NnIndex {
    tree: Option<kdtree::KdTree>,
}

impl NnIndex {
    pub fn new(ds: &Dataset) -> Self {
        let tree = (ds.dim() <= 3).then(|| kdtree::KdTree::build(ds));
        NnIndex { tree }
    }

    pub fn knn(&self, ds: &Dataset, q: &[Real], k: usize, exclude: &[usize]) -> Result<KnnResult> {
        match &self.tree {
            None => knn_query(ds, q, k, exclude),
            Some(tree) => {
                let excluded_in_range = exclude.iter().filter(|&&i| i < ds.n()).count();
                check_k(k, ds.n() - excluded_in_range)?;
                let mut heap = BinaryHeap::with_capacity(k + 1);
                tree.knn_into(ds, q, k, exclude, &mut heap);
                Ok(drain_heap(heap))
            }
        }
    }

    /// All `(index, distance)` pairs with distance <= radius, in
    /// unspecified order.
    pub fn within(&self, ds: &Dataset, q: &[Real], radius: Real, out: &mut Vec<(usize, Real)>) {
        out.clear();
        match &self.tree {
            None => {
                for i in 0..ds.n() {
                    let d = ds.dist_to(q, i);
                    if d <= radius {
                        out.push((i, d));
                    }
                }
            }
            Some(tree) => tree.within_into(ds, q, radius, out),
        }
    }
}

/// Ground-truth k-distance table: one exact k_max-NN query per point.
/// Rows are independent, so the parallel schedule cannot change the result.
pub fn build_kdist_table(ds: &Dataset, k_max: usize) -> Result<KDistTable> {
    check_k(k_max, ds.n() - 1)?;
    let index = NnIndex::new(ds);
    let rows: Vec<Vec<Real>> = (0..ds.n())
        .into_par_iter()
        .map(|p| index.knn(ds, ds.point(p), k_max, &[p]).map(|r| r.distances))
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((ds.n(), k_max));
    for (p, row) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().enumerate() {
            values[(p, i)] = v;
        }
    }
    KDistTable::new(values)
}

/// Brute-force reverse kNN: `o` is in the result iff
/// `dist(q, o) <= nndist(o, k)`, with `q_index` (when given) skipped as a
/// candidate. Every k-distance is recomputed by linear selection here; this
/// route shares no code with the filter engine.
pub fn rknn_bruteforce(
    ds: &Dataset,
    q: &[Real],
    k: usize,
    q_index: Option<usize>,
) -> Result<Vec<usize>> {
    check_k(k, ds.n() - 1)?;
    let mut result = Vec::new();
    let mut buf: Vec<Real> = Vec::with_capacity(ds.n() - 1);
    for o in 0..ds.n() {
        if Some(o) == q_index {
            continue;
        }
        let d_qo = ds.dist_to(q, o);
        buf.clear();
        for j in 0..ds.n() {
            if j != o {
                buf.push(ds.dist(o, j));
            }
        }
        let (_, kth, _) =
            buf.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite"));
        if d_qo <= *kth {
            result.push(o);
        }
    }
    Ok(result)
}
