//! Guaranteed k-distance bounds derived from training residuals.
//!
//! A fitted model approximates normalized k-distances; it comes with no
//! guarantee. This module turns it into one: the residual of every training
//! cell is recorded, residuals are aggregated into compact lower/upper
//! deltas, and adding those deltas to a prediction yields an interval that
//! provably contains the true k-distance of every training point.
//!
//! Three aggregation granularities trade storage for tightness:
//!
//! * [`BoundMode::OverPoints`] — one lo/hi delta per `k`, aggregated over
//!   all points (2·k_max scalars);
//! * [`BoundMode::OverK`] — one lo/hi delta per point, aggregated over all
//!   `k` (2·n scalars);
//! * [`BoundMode::Combined`] — keep both and evaluate with
//!   `Δ↓ = max(Δ↓ per-point, Δ↓ per-k)` and `Δ↑ = min(...)`, an interval
//!   contained in both single-mode intervals (2·(n + k_max) scalars).
//!
//! Evaluation optionally tightens further: clipping at zero (k-distances
//! are non-negative) and monotonicity restoration (k-distances never
//! decrease with `k`, so any upper bound at `k' ≥ k` also bounds `k`, and
//! any lower bound at `k' ≤ k` bounds `k`).
//!
//! Aggregation itself is pure min/max arithmetic. Because predictions,
//! normalization, and denormalization each round once in 64-bit floating
//! point, a raw aggregate can miss a true value re-derived through that
//! pipeline by a last-place digit. [`calibration_margin`] measures, on the
//! training table, the single smallest normalized-space widening after
//! which the *evaluated* intervals contain every raw k-distance, and
//! [`BoundSet::widen`] folds it into the stored deltas. The margin is
//! computed from the Combined deltas (the tightest) and applied uniformly,
//! so every mode stays valid and the containment ordering between modes is
//! preserved bit for bit.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::KDistNormParams;
use crate::regress::KDistModel;
use crate::table::KDistTable;
use crate::Real;

/// Per-cell training residuals in normalized space:
/// `delta[p][k-1] = normalized_target(p,k) − prediction(p,k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    delta: Array2<Real>,
}

impl ResidualMatrix {
    pub fn new(delta: Array2<Real>) -> Result<Self> {
        if delta.nrows() == 0 || delta.ncols() == 0 {
            return Err(Error::ShapeMismatch(
                "residual matrix must be non-empty".into(),
            ));
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("residuals"));
        }
        Ok(ResidualMatrix { delta })
    }

    /// `targets − predictions`, elementwise.
    pub fn from_predictions(
        predictions: &ArrayView2<Real>,
        targets: &ArrayView2<Real>,
    ) -> Result<Self> {
        if predictions.dim() != targets.dim() {
            return Err(Error::ShapeMismatch(format!(
                "predictions {:?} vs targets {:?}",
                predictions.dim(),
                targets.dim()
            )));
        }
        ResidualMatrix::new(targets - predictions)
    }

    pub fn n(&self) -> usize {
        self.delta.nrows()
    }

    pub fn k_max(&self) -> usize {
        self.delta.ncols()
    }

    pub fn values(&self) -> &Array2<Real> {
        &self.delta
    }
}

/// Runs the model over all normalized inputs and subtracts the predictions
/// from the normalized targets.
pub fn compute_residuals(
    model: &dyn KDistModel,
    inputs: &ArrayView2<Real>,
    normalized_targets: &ArrayView2<Real>,
) -> Result<ResidualMatrix> {
    let predictions = model.predict_batch(inputs)?;
    ResidualMatrix::from_predictions(&predictions.view(), normalized_targets)
}

/// Residual aggregation granularity. The serialized names follow the axis
/// the deltas are *indexed* by after aggregating the other one away:
/// `"D"` keeps one delta per k (aggregated over the dataset), `"K"` one per
/// point (aggregated over k), `"KD"` keeps both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundMode {
    #[serde(rename = "D")]
    OverPoints,
    #[serde(rename = "K")]
    OverK,
    #[serde(rename = "KD")]
    Combined,
}

impl BoundMode {
    pub const ALL: [BoundMode; 3] = [BoundMode::OverPoints, BoundMode::OverK, BoundMode::Combined];

    pub fn tag(self) -> &'static str {
        match self {
            BoundMode::OverPoints => "D",
            BoundMode::OverK => "K",
            BoundMode::Combined => "KD",
        }
    }
}

/// Optional bound enhancements applied at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundFlags {
    /// Clamp bounds at zero (a k-distance is never negative).
    pub clip_nonneg: bool,
    /// Replace `ub(k)` by `min over k' ≥ k` and `lb(k)` by `max over k' ≤ k`.
    pub restore_monotone: bool,
}

impl Default for BoundFlags {
    fn default() -> Self {
        BoundFlags {
            clip_nonneg: true,
            restore_monotone: true,
        }
    }
}

impl BoundFlags {
    pub fn none() -> Self {
        BoundFlags {
            clip_nonneg: false,
            restore_monotone: false,
        }
    }

    pub const ALL: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];
}

/// Stored delta vectors, by mode.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundDeltas {
    /// Indexed by `k − 1`; length `k_max` each.
    OverPoints { lo: Vec<Real>, hi: Vec<Real> },
    /// Indexed by point; length `n` each.
    OverK { lo: Vec<Real>, hi: Vec<Real> },
    /// Both of the above.
    Combined {
        lo_per_k: Vec<Real>,
        hi_per_k: Vec<Real>,
        lo_per_p: Vec<Real>,
        hi_per_p: Vec<Real>,
    },
}

/// Aggregated residual deltas plus the enhancement flags they are meant to
/// be evaluated with. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub deltas: BoundDeltas,
    pub flags: BoundFlags,
    pub n: usize,
    pub k_max: usize,
}

/// Aggregates a residual matrix into per-mode lo/hi deltas.
pub fn aggregate(residuals: &ResidualMatrix, mode: BoundMode, flags: BoundFlags) -> BoundSet {
    let d = &residuals.delta;
    let (n, k_max) = d.dim();
    let per_k = || {
        let mut lo = vec![Real::INFINITY; k_max];
        let mut hi = vec![Real::NEG_INFINITY; k_max];
        for p in 0..n {
            for k in 0..k_max {
                let v = d[(p, k)];
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        (lo, hi)
    };
    let per_p = || {
        let mut lo = vec![Real::INFINITY; n];
        let mut hi = vec![Real::NEG_INFINITY; n];
        for p in 0..n {
            for k in 0..k_max {
                let v = d[(p, k)];
                lo[p] = lo[p].min(v);
                hi[p] = hi[p].max(v);
            }
        }
        (lo, hi)
    };
    let deltas = match mode {
        BoundMode::OverPoints => {
            let (lo, hi) = per_k();
            BoundDeltas::OverPoints { lo, hi }
        }
        BoundMode::OverK => {
            let (lo, hi) = per_p();
            BoundDeltas::OverK { lo, hi }
        }
        BoundMode::Combined => {
            let (lo_per_k, hi_per_k) = per_k();
            let (lo_per_p, hi_per_p) = per_p();
            BoundDeltas::Combined {
                lo_per_k,
                hi_per_k,
                lo_per_p,
                hi_per_p,
            }
        }
    };
    BoundSet {
        deltas,
        flags,
        n,
        k_max,
    }
}

/// One evaluated row of enhanced bounds for a database point.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBounds {
    /// Raw-space lower bounds for `k = 1..=k_max`.
    pub lb: Vec<Real>,
    /// Raw-space upper bounds for `k = 1..=k_max`.
    pub ub: Vec<Real>,
    /// Cells where `ub := max(ub, lb)` had to be enforced. Zero whenever
    /// the bound set is valid for the evaluated point.
    pub crossings: usize,
}

impl BoundSet {
    pub fn mode(&self) -> BoundMode {
        match self.deltas {
            BoundDeltas::OverPoints { .. } => BoundMode::OverPoints,
            BoundDeltas::OverK { .. } => BoundMode::OverK,
            BoundDeltas::Combined { .. } => BoundMode::Combined,
        }
    }

    /// Number of stored scalars; the bound section's contribution to the
    /// index size. Exactly `2·k_max`, `2·n`, or `2·(n + k_max)` by mode.
    pub fn delta_count(&self) -> usize {
        match &self.deltas {
            BoundDeltas::OverPoints { lo, hi } => lo.len() + hi.len(),
            BoundDeltas::OverK { lo, hi } => lo.len() + hi.len(),
            BoundDeltas::Combined {
                lo_per_k,
                hi_per_k,
                lo_per_p,
                hi_per_p,
            } => lo_per_k.len() + hi_per_k.len() + lo_per_p.len() + hi_per_p.len(),
        }
    }

    /// Lower delta for point `p` at `k` (1-based).
    pub fn delta_lo(&self, p: usize, k: usize) -> Real {
        match &self.deltas {
            BoundDeltas::OverPoints { lo, .. } => lo[k - 1],
            BoundDeltas::OverK { lo, .. } => lo[p],
            BoundDeltas::Combined {
                lo_per_k, lo_per_p, ..
            } => lo_per_p[p].max(lo_per_k[k - 1]),
        }
    }

    /// Upper delta for point `p` at `k` (1-based).
    pub fn delta_hi(&self, p: usize, k: usize) -> Real {
        match &self.deltas {
            BoundDeltas::OverPoints { hi, .. } => hi[k - 1],
            BoundDeltas::OverK { hi, .. } => hi[p],
            BoundDeltas::Combined {
                hi_per_k, hi_per_p, ..
            } => hi_per_p[p].min(hi_per_k[k - 1]),
        }
    }

    /// Widens every stored delta by `margin` (lower down, upper up) in
    /// normalized space. Uniform widening commutes with the Combined-mode
    /// min/max, so interval containment between modes is unaffected.
    pub fn widen(&mut self, margin: Real) {
        let down = |v: &mut Vec<Real>| v.iter_mut().for_each(|x| *x -= margin);
        let up = |v: &mut Vec<Real>| v.iter_mut().for_each(|x| *x += margin);
        match &mut self.deltas {
            BoundDeltas::OverPoints { lo, hi } | BoundDeltas::OverK { lo, hi } => {
                down(lo);
                up(hi);
            }
            BoundDeltas::Combined {
                lo_per_k,
                hi_per_k,
                lo_per_p,
                hi_per_p,
            } => {
                down(lo_per_k);
                up(hi_per_k);
                down(lo_per_p);
                up(hi_per_p);
            }
        }
    }

    /// Evaluates the full enhanced bound row for database point `p`.
    ///
    /// `pred_row` holds the model's normalized predictions for `p` at
    /// `k = 1..=k_max`. Pipeline: add deltas, denormalize per `k` (an
    /// increasing affine map, so ordering survives), clip at zero,
    /// restore monotonicity, then defensively enforce `lb ≤ ub`.
    pub fn evaluate_rows(
        &self,
        p: usize,
        pred_row: &[Real],
        norm: &KDistNormParams,
    ) -> Result<RowBounds> {
        if pred_row.len() != self.k_max {
            return Err(Error::ShapeMismatch(format!(
                "prediction row has {} entries, bound set expects {}",
                pred_row.len(),
                self.k_max
            )));
        }
        let mut lb = Vec::with_capacity(self.k_max);
        let mut ub = Vec::with_capacity(self.k_max);
        for k in 1..=self.k_max {
            let pred = pred_row[k - 1];
            lb.push(norm.invert(pred + self.delta_lo(p, k), k)?);
            ub.push(norm.invert(pred + self.delta_hi(p, k), k)?);
        }
        if self.flags.clip_nonneg {
            lb.iter_mut().for_each(|v| *v = v.max(0.0));
            ub.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        if self.flags.restore_monotone {
            restore_monotone_ub(&mut ub);
            restore_monotone_lb(&mut lb);
        }
        let mut crossings = 0;
        for k in 0..self.k_max {
            if lb[k] > ub[k] {
                ub[k] = lb[k];
                crossings += 1;
            }
        }
        Ok(RowBounds { lb, ub, crossings })
    }

    /// Evaluates the enhanced `(lb, ub)` pair for point `p` at one `k`.
    pub fn evaluate_bounds(
        &self,
        p: usize,
        pred_row: &[Real],
        norm: &KDistNormParams,
        k: usize,
    ) -> Result<(Real, Real)> {
        if k == 0 || k > self.k_max {
            return Err(Error::KOutOfRange {
                k,
                k_max: self.k_max,
            });
        }
        let rows = self.evaluate_rows(p, pred_row, norm)?;
        Ok((rows.lb[k - 1], rows.ub[k - 1]))
    }
}

/// Suffix minimum: any upper bound at a larger `k` also upper-bounds this
/// one because true k-distances never decrease in `k`.
pub(crate) fn restore_monotone_ub(ub: &mut [Real]) {
    for k in (0..ub.len().saturating_sub(1)).rev() {
        ub[k] = ub[k].min(ub[k + 1]);
    }
}

/// Prefix maximum, the mirror image for lower bounds.
pub(crate) fn restore_monotone_lb(lb: &mut [Real]) {
    for k in 1..lb.len() {
        lb[k] = lb[k].max(lb[k - 1]);
    }
}

/// Smallest uniform normalized-space widening after which the evaluated
/// base intervals (Combined deltas, no enhancements) contain every raw
/// training k-distance, despite the independent roundings in prediction,
/// normalization, and denormalization.
///
/// Widening by the returned margin keeps every mode and flag combination
/// complete: looser modes contain the Combined interval, clipping is safe
/// because true k-distances are non-negative, and restoration is safe
/// because they are non-decreasing in `k`.
pub fn calibration_margin(
    predictions: &ArrayView2<Real>,
    residuals: &ResidualMatrix,
    norm: &KDistNormParams,
    table: &KDistTable,
) -> Result<Real> {
    let (n, k_max) = (residuals.n(), residuals.k_max());
    if predictions.dim() != (n, k_max) || table.n() != n || table.k_max() != k_max {
        return Err(Error::ShapeMismatch(
            "predictions, residuals, and table must agree in shape".into(),
        ));
    }
    let base = aggregate(residuals, BoundMode::Combined, BoundFlags::none());
    let mut margin = 0.0_f64;
    for _ in 0..64 {
        // Largest additional normalized slack any cell still needs.
        let mut deficit = 0.0_f64;
        for p in 0..n {
            for k in 1..=k_max {
                let pred = predictions[(p, k - 1)];
                let raw_lo = norm.invert(pred + (base.delta_lo(p, k) - margin), k)?;
                let raw_hi = norm.invert(pred + (base.delta_hi(p, k) + margin), k)?;
                let truth = table.get(p, k)?;
                let scale = norm.scale(k)?;
                if raw_lo > truth {
                    deficit = deficit.max((raw_lo - truth) / scale);
                }
                if raw_hi < truth {
                    deficit = deficit.max((truth - raw_hi) / scale);
                }
            }
        }
        if deficit == 0.0 {
            return Ok(margin);
        }
        let bumped = margin + deficit;
        margin = if bumped > margin { bumped } else { margin }.next_up();
    }
    Err(Error::Numeric("bound calibration did not converge"))
}
