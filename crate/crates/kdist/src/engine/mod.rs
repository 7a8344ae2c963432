//! Exact RkNN query processing over a filter index, plus index persistence.
//!
//! A query `RkNN(q, k)` returns every database point `o` with
//! `dist(q, o) ≤ nndist(o, k)` — the points that count `q` among their own
//! k nearest neighbors (distance ties included; see the oracle module).
//! The engine answers it in two phases over an [`IndexArtifact`]:
//!
//! 1. **Filter** — one linear scan over the database. For each point `o`
//!    the index supplies `lb(o,k) ≤ nndist(o,k) ≤ ub(o,k)`;
//!    `d ≤ lb` proves membership, `d > ub` proves non-membership, and only
//!    the remainder (`lb < d ≤ ub`) survives as a candidate.
//! 2. **Refinement** — each candidate's exact k-distance is computed with
//!    the oracle's kNN search and the membership test is applied directly.
//!
//! Because the bounds are conservative, the result equals the brute-force
//! reference exactly; the filter only decides how many candidates reach the
//! expensive refinement (the candidate set size, CSS).
//!
//! [`PreparedIndex`] evaluates the model for the whole database in one
//! batch and stores the enhanced bound matrices, so repeated queries cost
//! one distance scan plus refinement only.

mod io;

pub use io::{load_index, save_index};

use std::time::Instant;

use ndarray::Array2;

use crate::bounds::BoundSet;
use crate::cop::CopModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::normalize::{zscore_apply_all, KDistNormParams, ZScoreParams};
use crate::oracle::NnIndex;
use crate::regress::{KDistModel, TrainedModel};
use crate::Real;

/// The filter model stored in an artifact.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexModel {
    /// A learned regressor plus residual-derived bounds.
    Learned(TrainedModel),
    /// The per-point log-log-linear baseline; self-bounding.
    Cop(CopModel),
}

impl IndexModel {
    pub fn kind(&self) -> &'static str {
        match self {
            IndexModel::Learned(m) => m.kind(),
            IndexModel::Cop(_) => "cop",
        }
    }

    pub fn k_max(&self) -> usize {
        match self {
            IndexModel::Learned(m) => m.k_max(),
            IndexModel::Cop(m) => m.k_max(),
        }
    }
}

/// Everything needed to answer filtered RkNN queries on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexArtifact {
    /// Input transform; `None` for the baseline, which works on raw data.
    pub zscore: Option<ZScoreParams>,
    /// Per-k target transform; `None` for the baseline.
    pub kdist_norm: Option<KDistNormParams>,
    pub model: IndexModel,
    /// Residual bound deltas; `None` for the baseline.
    pub bounds: Option<BoundSet>,
    pub k_max: usize,
    /// SHA-256 of the dataset the artifact was built on.
    pub fingerprint: [u8; 32],
}

impl IndexArtifact {
    /// Assembles a learned-model artifact, checking that all parts describe
    /// the same input dimension and k range.
    pub fn learned(
        zscore: ZScoreParams,
        kdist_norm: KDistNormParams,
        model: TrainedModel,
        bounds: BoundSet,
        fingerprint: [u8; 32],
    ) -> Result<Self> {
        let artifact = IndexArtifact {
            k_max: model.k_max(),
            zscore: Some(zscore),
            kdist_norm: Some(kdist_norm),
            model: IndexModel::Learned(model),
            bounds: Some(bounds),
            fingerprint,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    /// Assembles a baseline artifact; the lines carry their own bounds, so
    /// no normalization or bound sections are stored.
    pub fn cop(model: CopModel, fingerprint: [u8; 32]) -> Self {
        IndexArtifact {
            zscore: None,
            kdist_norm: None,
            k_max: model.k_max(),
            model: IndexModel::Cop(model),
            bounds: None,
            fingerprint,
        }
    }

    /// Cross-field consistency; also run after loading from disk.
    pub(crate) fn validate(&self) -> Result<()> {
        match &self.model {
            IndexModel::Learned(m) => {
                let zs = self.zscore.as_ref().ok_or_else(|| {
                    Error::CorruptArtifact("learned artifact lacks z-score section".into())
                })?;
                let norm = self.kdist_norm.as_ref().ok_or_else(|| {
                    Error::CorruptArtifact("learned artifact lacks k-distance normalization".into())
                })?;
                let bounds = self.bounds.as_ref().ok_or_else(|| {
                    Error::CorruptArtifact("learned artifact lacks bounds".into())
                })?;
                let ok = zs.dim() == m.input_dim()
                    && norm.k_max() == m.k_max()
                    && bounds.k_max == m.k_max()
                    && self.k_max == m.k_max();
                if !ok {
                    return Err(Error::CorruptArtifact(
                        "artifact sections disagree on dimensions".into(),
                    ));
                }
            }
            IndexModel::Cop(m) => {
                if self.zscore.is_some() || self.kdist_norm.is_some() || self.bounds.is_some() {
                    return Err(Error::CorruptArtifact(
                        "baseline artifact must not carry normalization or bound sections".into(),
                    ));
                }
                if self.k_max != m.k_max() {
                    return Err(Error::CorruptArtifact(
                        "artifact k_max disagrees with baseline model".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Total stored scalars: the index-size axis of every trade-off plot.
    /// Learned: model + 2·d (z-score) + 2·k_max (target normalization) +
    /// bound deltas. Baseline: exactly 4·n.
    pub fn param_count(&self) -> usize {
        match &self.model {
            IndexModel::Learned(m) => {
                m.param_count()
                    + self.zscore.as_ref().map_or(0, |z| z.param_count())
                    + self.kdist_norm.as_ref().map_or(0, |n| n.param_count())
                    + self.bounds.as_ref().map_or(0, |b| b.delta_count())
            }
            IndexModel::Cop(m) => m.param_count(),
        }
    }
}

/// Filter decision for one database point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    Include,
    Candidate,
    Reject,
}

/// `d ≤ lb` proves membership, `d > ub` proves non-membership, anything
/// between must be refined.
pub(crate) fn classify(d: Real, lb: Real, ub: Real) -> Branch {
    if d <= lb {
        Branch::Include
    } else if d <= ub {
        Branch::Candidate
    } else {
        Branch::Reject
    }
}

/// Per-query filter/refinement counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryStats {
    /// Accepted by the lower bound, no refinement needed.
    pub included: usize,
    /// Survived the filter undecided; equals the candidate set size (CSS).
    pub candidates: usize,
    /// Rejected by the upper bound.
    pub rejected: usize,
    /// Candidates confirmed during refinement.
    pub refined_in: usize,
    /// Candidates discarded during refinement.
    pub refined_out: usize,
    /// Whether a `q_index` database point was skipped.
    pub skipped_self: bool,
    pub wall_ms: f64,
}

impl QueryStats {
    /// Candidate set size: the work the filter passes to refinement.
    pub fn css(&self) -> usize {
        self.candidates
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Result point indices, ascending.
    pub indices: Vec<usize>,
    pub stats: QueryStats,
}

/// An artifact evaluated against its dataset: enhanced bound matrices for
/// every point and every k, plus the exact-kNN index for refinement.
/// Immutable; queries are pure reads and safe to run concurrently.
pub struct PreparedIndex<'a> {
    ds: &'a Dataset,
    k_max: usize,
    lb: Array2<Real>,
    ub: Array2<Real>,
    nn: NnIndex,
    /// Defensive `ub := max(ub, lb)` enforcements during preparation; zero
    /// whenever the artifact is valid for this dataset.
    pub crossings: usize,
}

impl<'a> PreparedIndex<'a> {
    pub fn prepare(artifact: &IndexArtifact, ds: &'a Dataset) -> Result<Self> {
        if ds.fingerprint() != artifact.fingerprint {
            return Err(Error::FingerprintMismatch);
        }
        artifact.validate()?;
        let n = ds.n();
        let k_max = artifact.k_max;
        let mut lb = Array2::zeros((n, k_max));
        let mut ub = Array2::zeros((n, k_max));
        let mut crossings = 0usize;
        match &artifact.model {
            IndexModel::Learned(model) => {
                let zs = artifact.zscore.as_ref().expect("validated");
                let norm = artifact.kdist_norm.as_ref().expect("validated");
                let bounds = artifact.bounds.as_ref().expect("validated");
                if bounds.n != n {
                    return Err(Error::ShapeMismatch(format!(
                        "bound set covers {} points, dataset has {n}",
                        bounds.n
                    )));
                }
                let inputs = zscore_apply_all(zs, ds)?;
                // One batched model evaluation for the entire database.
                let predictions = model.predict_batch(&inputs.view())?;
                for p in 0..n {
                    let row = bounds.evaluate_rows(
                        p,
                        predictions.row(p).as_slice().expect("row-major"),
                        norm,
                    )?;
                    crossings += row.crossings;
                    for k in 0..k_max {
                        lb[(p, k)] = row.lb[k];
                        ub[(p, k)] = row.ub[k];
                    }
                }
            }
            IndexModel::Cop(model) => {
                if model.n() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "baseline covers {} points, dataset has {n}",
                        model.n()
                    )));
                }
                for p in 0..n {
                    let (row_lb, row_ub) = model.bounds_row(p);
                    for k in 0..k_max {
                        lb[(p, k)] = row_lb[k];
                        ub[(p, k)] = row_ub[k];
                    }
                }
            }
        }
        Ok(PreparedIndex {
            ds,
            k_max,
            lb,
            ub,
            nn: NnIndex::new(ds),
            crossings,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    /// Lower bound for point `p` at `k` (1-based).
    pub fn lb(&self, p: usize, k: usize) -> Real {
        self.lb[(p, k - 1)]
    }

    /// Upper bound for point `p` at `k` (1-based).
    pub fn ub(&self, p: usize, k: usize) -> Real {
        self.ub[(p, k - 1)]
    }

    /// Exact k-distance of database point `o`, via the refinement oracle.
    pub fn exact_kdist(&self, o: usize, k: usize) -> Result<Real> {
        let knn = self.nn.knn(self.ds, self.ds.point(o), k, &[o])?;
        Ok(knn.distances[k - 1])
    }

    /// Candidate-set size of the filter for every database point as query
    /// and every `k`; cell `(i, k-1)` equals `query(point(i), k, Some(i))`'s
    /// candidate count.
    ///
    /// Runs inverted: each object is looked up once inside its own widest
    /// upper bound, and contributes to every query it would reach. Distances
    /// are evaluated coordinate-for-coordinate in the same order as a
    /// forward scan, so the counts match the per-query filter exactly while
    /// the cost stays proportional to the candidates produced.
    pub fn css_matrix(&self) -> Array2<u64> {
        let n = self.ds.n();
        let mut css = Array2::zeros((n, self.k_max));
        let mut hits: Vec<(usize, Real)> = Vec::new();
        for o in 0..n {
            let mut radius: Real = 0.0;
            for k in 0..self.k_max {
                radius = radius.max(self.ub[(o, k)]);
            }
            self.nn.within(self.ds, self.ds.point(o), radius, &mut hits);
            for &(q, d) in &hits {
                if q == o {
                    continue;
                }
                for k in 0..self.k_max {
                    if d > self.lb[(o, k)] && d <= self.ub[(o, k)] {
                        css[(q, k)] += 1;
                    }
                }
            }
        }
        css
    }

    /// Answers `RkNN(q, k)` exactly. Pass `q_index` when `q` is the
    /// database point with that index to exclude it from its own result.
    pub fn query(&self, q: &[Real], k: usize, q_index: Option<usize>) -> Result<QueryResult> {
        let start = Instant::now();
        if k == 0 || k > self.k_max {
            return Err(Error::KOutOfRange {
                k,
                k_max: self.k_max,
            });
        }
        if q.len() != self.ds.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ds.dim(),
                got: q.len(),
            });
        }
        let n = self.ds.n();
        let mut indices = Vec::new();
        let mut candidates: Vec<(usize, Real)> = Vec::new();
        let mut stats = QueryStats {
            included: 0,
            candidates: 0,
            rejected: 0,
            refined_in: 0,
            refined_out: 0,
            skipped_self: false,
            wall_ms: 0.0,
        };
        // Phase 1: filter every database point on bounds alone.
        for o in 0..n {
            if q_index == Some(o) {
                stats.skipped_self = true;
                continue;
            }
            let d = self.ds.dist_to(q, o);
            match classify(d, self.lb[(o, k - 1)], self.ub[(o, k - 1)]) {
                Branch::Include => {
                    stats.included += 1;
                    indices.push(o);
                }
                Branch::Candidate => candidates.push((o, d)),
                Branch::Reject => stats.rejected += 1,
            }
        }
        stats.candidates = candidates.len();
        // Phase 2: refine the undecided candidates with exact k-distances.
        for (o, d) in candidates {
            let kd = self.exact_kdist(o, k)?;
            if d <= kd {
                stats.refined_in += 1;
                indices.push(o);
            } else {
                stats.refined_out += 1;
            }
        }
        indices.sort_unstable();
        stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(QueryResult { indices, stats })
    }
}

/// One-shot convenience: prepares the artifact for this dataset and runs a
/// single query. Hold a [`PreparedIndex`] instead when issuing many.
pub fn rknn_query(
    artifact: &IndexArtifact,
    ds: &Dataset,
    q: &[Real],
    k: usize,
    q_index: Option<usize>,
) -> Result<QueryResult> {
    PreparedIndex::prepare(artifact, ds)?.query(q, k, q_index)
}

/// Builds a learned artifact from already-fitted parts by running the
/// residual/calibration pipeline on the training table.
pub fn build_learned_artifact(
    ds: &Dataset,
    table: &crate::table::KDistTable,
    zscore: ZScoreParams,
    kdist_norm: KDistNormParams,
    model: TrainedModel,
    mode: crate::bounds::BoundMode,
    flags: crate::bounds::BoundFlags,
) -> Result<IndexArtifact> {
    let inputs = zscore_apply_all(&zscore, ds)?;
    let predictions = model.predict_batch(&inputs.view())?;
    let targets = crate::normalize::kdist_norm_apply_table(&kdist_norm, table)?;
    let residuals =
        crate::bounds::ResidualMatrix::from_predictions(&predictions.view(), &targets.view())?;
    let margin =
        crate::bounds::calibration_margin(&predictions.view(), &residuals, &kdist_norm, table)?;
    let mut bounds = crate::bounds::aggregate(&residuals, mode, flags);
    bounds.widen(margin);
    IndexArtifact::learned(zscore, kdist_norm, model, bounds, ds.fingerprint())
}
