//! Multi-output regression tree.
//!
//! Greedy CART-style construction: every split minimizes the weighted
//! squared error summed over all k_max outputs, with an independent weight
//! per sample-output cell. Leaves store the weighted mean per output, with a
//! constant fast path: when every target in a leaf agrees bit-for-bit the
//! leaf stores that value directly, so a depth-unbounded tree reproduces its
//! training targets exactly.
//!
//! There is no randomness anywhere; refitting on identical inputs yields an
//! identical tree, and scaling all weights by a power of two changes nothing
//! (gains and means scale exactly).

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Real;

use super::{validate_fit_inputs, KDistModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Maximum number of split levels above a leaf; `None` grows until pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: Some(8),
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node<S> {
    Split {
        feature: u32,
        threshold: S,
        left: u32,
        right: u32,
    },
    Leaf {
        values: Vec<S>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel<S: Scalar> {
    pub(crate) nodes: Vec<Node<S>>,
    pub(crate) root: u32,
    input_dim: usize,
    k_max: usize,
}

struct Builder<'a, S: Scalar> {
    xs: &'a [S],
    ts: &'a [S],
    ws: &'a [S],
    dim: usize,
    k_max: usize,
    config: &'a TreeConfig,
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> TreeModel<S> {
    pub fn fit(
        inputs: &ArrayView2<Real>,
        targets: &ArrayView2<Real>,
        weights: &ArrayView2<Real>,
        config: &TreeConfig,
    ) -> Result<Self> {
        validate_fit_inputs(inputs, targets, weights)?;
        let (n, dim) = inputs.dim();
        let k_max = targets.ncols();
        let conv =
            |m: &ArrayView2<Real>| -> Vec<S> { m.iter().map(|&v| S::from_real(v)).collect() };
        let (xs, ts, ws) = (conv(inputs), conv(targets), conv(weights));
        let mut b = Builder {
            xs: &xs,
            ts: &ts,
            ws: &ws,
            dim,
            k_max,
            config,
            nodes: Vec::new(),
        };
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let root = b.build(&mut idx, 0);
        Ok(TreeModel {
            nodes: b.nodes,
            root,
            input_dim: dim,
            k_max,
        })
    }

    /// Reassembles a tree from stored parts; the caller (the artifact
    /// loader) is responsible for structural validation.
    pub(crate) fn from_parts(
        nodes: Vec<Node<S>>,
        root: u32,
        input_dim: usize,
        k_max: usize,
    ) -> Self {
        TreeModel {
            nodes,
            root,
            input_dim,
            k_max,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<S>(nodes: &[Node<S>], at: u32) -> usize {
            match &nodes[at as usize] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, self.root)
    }

    pub fn internal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.internal_count()
    }

    fn leaf_for(&self, x: &[S]) -> &[S] {
        let mut at = self.root;
        loop {
            match &self.nodes[at as usize] {
                Node::Leaf { values } => return values,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

impl<'a, S: Scalar> Builder<'a, S> {
    fn target(&self, i: u32, k: usize) -> S {
        self.ts[i as usize * self.k_max + k]
    }

    fn weight(&self, i: u32, k: usize) -> S {
        self.ws[i as usize * self.k_max + k]
    }

    fn coord(&self, i: u32, f: usize) -> S {
        self.xs[i as usize * self.dim + f]
    }

    fn build(&mut self, idx: &mut [u32], depth: usize) -> u32 {
        let can_split = idx.len() >= self.config.min_samples_split
            && self.config.max_depth.is_none_or(|d| depth < d);
        if can_split {
            if let Some((feature, threshold)) = self.best_split(idx) {
                let mid = partition(idx, |i| self.coord(i, feature) <= threshold);
                debug_assert!(mid > 0 && mid < idx.len());
                let (l, r) = idx.split_at_mut(mid);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                self.nodes.push(Node::Split {
                    feature: feature as u32,
                    threshold,
                    left,
                    right,
                });
                return (self.nodes.len() - 1) as u32;
            }
        }
        let values = self.leaf_values(idx);
        self.nodes.push(Node::Leaf { values });
        (self.nodes.len() - 1) as u32
    }

    /// Weighted mean per output; exact passthrough when all targets agree.
    fn leaf_values(&self, idx: &[u32]) -> Vec<S> {
        let mut values = Vec::with_capacity(self.k_max);
        for k in 0..self.k_max {
            let first = self.target(idx[0], k);
            if idx.iter().all(|&i| self.target(i, k) == first) {
                values.push(first);
                continue;
            }
            let mut sw = S::zero();
            let mut swt = S::zero();
            for &i in idx {
                let w = self.weight(i, k);
                sw += w;
                swt += w * self.target(i, k);
            }
            if sw > S::zero() {
                values.push(swt / sw);
            } else {
                let mut s = S::zero();
                for &i in idx {
                    s += self.target(i, k);
                }
                values.push(s / S::from_real(idx.len() as f64));
            }
        }
        values
    }

    /// Exhaustive scan over (feature, boundary) pairs; returns the split with
    /// the largest impurity decrease, first-seen on ties, or `None` when no
    /// split has positive gain.
    fn best_split(&self, idx: &[u32]) -> Option<(usize, S)> {
        let m = idx.len();
        let total = self.node_stats(idx);
        let total_sse = sse_of(&total);
        let mut best: Option<(S, usize, S)> = None; // (gain, feature, threshold)

        let mut sorted: Vec<u32> = idx.to_vec();
        for f in 0..self.dim {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable_by(|&a, &b| {
                self.coord(a, f)
                    .partial_cmp(&self.coord(b, f))
                    .expect("finite")
                    .then(a.cmp(&b))
            });
            let mut left = Stats::zero(self.k_max);
            for cut in 1..m {
                let i = sorted[cut - 1];
                for k in 0..self.k_max {
                    let (w, t) = (self.weight(i, k), self.target(i, k));
                    left.sw[k] += w;
                    left.swt[k] += w * t;
                    left.swt2[k] += w * t * t;
                }
                let xl = self.coord(sorted[cut - 1], f);
                let xr = self.coord(sorted[cut], f);
                if xl == xr {
                    continue;
                }
                let right = total.minus(&left);
                let gain = total_sse - sse_of(&left) - sse_of(&right);
                if gain > S::zero() && best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                    let two = S::from_real(2.0);
                    let mut t = (xl + xr) / two;
                    if t >= xr {
                        t = xl; // adjacent floats: fall back to "<= left value"
                    }
                    best = Some((gain, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn node_stats(&self, idx: &[u32]) -> Stats<S> {
        let mut s = Stats::zero(self.k_max);
        for &i in idx {
            for k in 0..self.k_max {
                let (w, t) = (self.weight(i, k), self.target(i, k));
                s.sw[k] += w;
                s.swt[k] += w * t;
                s.swt2[k] += w * t * t;
            }
        }
        s
    }
}

struct Stats<S> {
    sw: Vec<S>,
    swt: Vec<S>,
    swt2: Vec<S>,
}

impl<S: Scalar> Stats<S> {
    fn zero(k_max: usize) -> Self {
        Stats {
            sw: vec![S::zero(); k_max],
            swt: vec![S::zero(); k_max],
            swt2: vec![S::zero(); k_max],
        }
    }

    fn minus(&self, other: &Stats<S>) -> Stats<S> {
        Stats {
            sw: self
                .sw
                .iter()
                .zip(&other.sw)
                .map(|(&a, &b)| a - b)
                .collect(),
            swt: self
                .swt
                .iter()
                .zip(&other.swt)
                .map(|(&a, &b)| a - b)
                .collect(),
            swt2: self
                .swt2
                .iter()
                .zip(&other.swt2)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

/// Weighted SSE around the weighted mean, summed over outputs:
/// `sum_k (swt2 - swt^2 / sw)`, clamped at zero against rounding.
fn sse_of<S: Scalar>(s: &Stats<S>) -> S {
    let mut acc = S::zero();
    for k in 0..s.sw.len() {
        if s.sw[k] > S::zero() {
            let v = s.swt2[k] - s.swt[k] * s.swt[k] / s.sw[k];
            if v > S::zero() {
                acc += v;
            }
        }
    }
    acc
}

/// Stable partition: order inside both halves is preserved; returns the size
/// of the `true` half.
fn partition<F: Fn(u32) -> bool>(idx: &mut [u32], pred: F) -> usize {
    let mut tmp: Vec<u32> = Vec::with_capacity(idx.len());
    for &i in idx.iter() {
        if pred(i) {
            tmp.push(i);
        }
    }
    let mid = tmp.len();
    for &i in idx.iter() {
        if !pred(i) {
            tmp.push(i);
        }
    }
    idx.copy_from_slice(&tmp);
    mid
}

impl<S: Scalar> KDistModel for TreeModel<S> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn k_max(&self) -> usize {
        self.k_max
    }

    fn predict_into(&self, x: &[Real], out: &mut [Real]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let xs: Vec<S> = x.iter().map(|&v| S::from_real(v)).collect();
        let leaf = self.leaf_for(&xs);
        for (o, &v) in out.iter_mut().zip(leaf) {
            *o = v.to_real();
        }
        Ok(())
    }

    /// Feature index and threshold per split, one value per leaf output.
    fn param_count(&self) -> usize {
        2 * self.internal_count() + self.k_max * self.leaf_count()
    }
}
