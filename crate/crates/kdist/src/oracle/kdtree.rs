//! Bucketed kd-tree for exact kNN and range queries in low dimensions.
//!
//! Built over point indices of a borrowed dataset. Splits choose the axis of
//! maximum spread and partition at the median under `(coordinate, index)`
//! ordering, so construction is deterministic. Queries keep the same
//! `(distance, index)` tie order as the linear scan in [`super`], and pruning
//! is non-strict-safe: a subtree is skipped only when its axis gap strictly
//! exceeds the current k-th best distance, so boundary ties are still visited
//! and results match the linear scan bit for bit.

use crate::dataset::Dataset;
use crate::Real;

use super::Cand;

const LEAF_SIZE: usize = 16;

enum Node {
    Internal {
        axis: usize,
        split: Real,
        left: usize,
        right: usize,
    },
    Leaf {
        start: usize,
        len: usize,
    },
}

pub struct KdTree {
    nodes: Vec<Node>,
    order: Vec<u32>,
    root: usize,
}

impl KdTree {
    pub fn build(ds: &Dataset) -> Self {
        let mut order: Vec<u32> = (0..ds.n() as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(ds, &mut order, 0, ds.n(), &mut nodes);
        KdTree { nodes, order, root }
    }

    /// Pushes the k nearest candidates into `heap` (a max-heap holding the
    /// best k seen so far). `exclude` indices never enter.
    pub fn knn_into(
        &self,
        ds: &Dataset,
        q: &[Real],
        k: usize,
        exclude: &[usize],
        heap: &mut std::collections::BinaryHeap<Cand>,
    ) {
        self.search(self.root, ds, q, k, exclude, heap);
    }

    fn search(
        &self,
        node: usize,
        ds: &Dataset,
        q: &[Real],
        k: usize,
        exclude: &[usize],
        heap: &mut std::collections::BinaryHeap<Cand>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, len } => {
                for &pi in &self.order[start..start + len] {
                    let pi = pi as usize;
                    if exclude.contains(&pi) {
                        continue;
                    }
                    let cand = Cand {
                        d: ds.dist_to(q, pi),
                        idx: pi,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap non-empty") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Internal {
                axis,
                split,
                left,
                right,
            } => {
                let (near, far) = if q[axis] <= split {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, ds, q, k, exclude, heap);
                let gap = (q[axis] - split).abs();
                // Visit the far side unless every point there is strictly
                // worse than the current k-th best; equality must recurse so
                // index ties resolve exactly like the linear scan.
                let prunable = heap.len() == k && gap > heap.peek().expect("full heap").d;
                if !prunable {
                    self.search(far, ds, q, k, exclude, heap);
                }
            }
        }
    }

    /// Appends `(index, distance)` for every point within `radius`
    /// (inclusive) of `q`.
    pub fn within_into(
        &self,
        ds: &Dataset,
        q: &[Real],
        radius: Real,
        out: &mut Vec<(usize, Real)>,
    ) {
        self.range(self.root, ds, q, radius, out);
    }

    fn range(
        &self,
        node: usize,
        ds: &Dataset,
        q: &[Real],
        radius: Real,
        out: &mut Vec<(usize, Real)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, len } => {
                for &pi in &self.order[start..start + len] {
                    let pi = pi as usize;
                    let d = ds.dist_to(q, pi);
                    if d <= radius {
                        out.push((pi, d));
                    }
                }
            }
            Node::Internal {
                axis,
                split,
                left,
                right,
            } => {
                let gap = (q[axis] - split).abs();
                let (near, far) = if q[axis] <= split {
                    (left, right)
                } else {
                    (right, left)
                };
                self.range(near, ds, q, radius, out);
                if gap <= radius {
                    self.range(far, ds, q, radius, out);
                }
            }
        }
    }
}

fn build_node(
    ds: &Dataset,
    order: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, len });
        return nodes.len() - 1;
    }
    let range = start..start + len;
    let axis = widest_axis(ds, &order[range.clone()]);
    let mid = len / 2;
    order[range.clone()].select_nth_unstable_by(mid, |&a, &b| {
        let (pa, pb) = (ds.point(a as usize)[axis], ds.point(b as usize)[axis]);
        pa.partial_cmp(&pb).expect("finite coords").then(a.cmp(&b))
    });
    let split = ds.point(order[start + mid] as usize)[axis];
    let left = build_node(ds, order, start, mid, nodes);
    let right = build_node(ds, order, start + mid, len - mid, nodes);
    nodes.push(Node::Internal {
        axis,
        split,
        left,
        right,
    });
    nodes.len() - 1
}

fn widest_axis(ds: &Dataset, idx: &[u32]) -> usize {
    let d = ds.dim();
    let mut lo = vec![Real::INFINITY; d];
    let mut hi = vec![Real::NEG_INFINITY; d];
    for &i in idx {
        for (a, &v) in ds.point(i as usize).iter().enumerate() {
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let mut best = 0;
    let mut best_spread = Real::NEG_INFINITY;
    for a in 0..d {
        let spread = hi[a] - lo[a];
        if spread > best_spread {
            best_spread = spread;
            best = a;
        }
    }
    best
}
