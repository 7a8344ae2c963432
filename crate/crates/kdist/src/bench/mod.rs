//! Evaluation and reporting: candidate-set-size metrics, the ablation grid,
//! Pareto skylines, synthetic data, and CSV/SVG emission.
//!
//! The central measurement is the candidate set size (CSS): how many points
//! survive the filter and reach the expensive refinement. It is hardware-
//! and implementation-independent, which makes it the honest axis for
//! comparing filter quality; wall time is recorded but only as provenance.
//! Every report row carries enough provenance (config hash, seed, dataset)
//! to be reproduced end to end.

use std::fs::{self, OpenOptions};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundFlags, BoundMode};
use crate::config::config_hash;
use crate::cop::{ols, LN_FLOOR};
use crate::dataset::{Dataset, Metric};
use crate::engine::{build_learned_artifact, IndexArtifact, IndexModel, PreparedIndex};
use crate::error::{Error, Result};
use crate::table::KDistTable;
use crate::trainer::{train_reweighted, TrainConfig, WeightSource};
use crate::Real;

/// Which points are used as queries. The reference CSS convention evaluates
/// every database point against its own index, so `All` is the reference
/// setting; `Auto` falls back to a seeded sample on large datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySet {
    All,
    Sample { m: usize, seed: u64 },
    Auto { seed: u64 },
}

impl Default for QuerySet {
    fn default() -> Self {
        QuerySet::Auto { seed: 0 }
    }
}

/// `Auto` uses every point up to this size…
pub const AUTO_QUERY_LIMIT: usize = 25_000;
/// …and a seeded sample of this many above it.
pub const AUTO_SAMPLE: usize = 10_000;

impl QuerySet {
    /// The sorted query indices this spec selects from an n-point dataset.
    pub fn resolve(&self, n: usize) -> Vec<usize> {
        let sample = |m: usize, seed: u64| -> Vec<usize> {
            if m >= n {
                return (0..n).collect();
            }
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (chosen, _) = idx.partial_shuffle(&mut rng, m);
            let mut chosen = chosen.to_vec();
            chosen.sort_unstable();
            chosen
        };
        match *self {
            QuerySet::All => (0..n).collect(),
            QuerySet::Sample { m, seed } => sample(m, seed),
            QuerySet::Auto { seed } => {
                if n <= AUTO_QUERY_LIMIT {
                    (0..n).collect()
                } else {
                    sample(AUTO_SAMPLE, seed)
                }
            }
        }
    }
}

/// Everything that identifies a run in the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: String,
    pub dataset: String,
    pub model_type: String,
    pub config_hash: String,
    pub seed: u64,
    /// Aggregation tag "K" | "D" | "KD", or "-" for the baseline.
    pub agg_mode: String,
    pub clip: bool,
    pub monotone: bool,
    /// Weight source tag, or "-" for the baseline.
    pub sample_weights: String,
    pub iterations: usize,
}

impl Provenance {
    pub fn from_train(run_id: &str, dataset: &str, cfg: &TrainConfig) -> Self {
        Provenance {
            run_id: run_id.into(),
            dataset: dataset.into(),
            model_type: cfg.model.kind().into(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            agg_mode: cfg.mode.tag().into(),
            clip: cfg.flags.clip_nonneg,
            monotone: cfg.flags.restore_monotone,
            sample_weights: cfg.weight_source.tag().into(),
            iterations: cfg.iterations,
        }
    }

    pub fn baseline(run_id: &str, dataset: &str, k_max: usize, restore_monotone: bool) -> Self {
        Provenance {
            run_id: run_id.into(),
            dataset: dataset.into(),
            model_type: "cop".into(),
            config_hash: config_hash(&("cop", k_max, restore_monotone)),
            seed: 0,
            agg_mode: "-".into(),
            clip: true,
            monotone: restore_monotone,
            sample_weights: "-".into(),
            iterations: 0,
        }
    }

    /// Provenance recovered from a saved artifact alone. An index stores
    /// its bound mode and enhancement flags but not its training history,
    /// so weighting and iteration count read as unknown ("-" / 0); use
    /// [`Provenance::from_train`] when the training config is at hand.
    pub fn from_artifact(run_id: &str, dataset: &str, artifact: &IndexArtifact) -> Self {
        match (&artifact.model, &artifact.bounds) {
            (IndexModel::Cop(m), _) => {
                Self::baseline(run_id, dataset, artifact.k_max, m.restore_monotone)
            }
            (IndexModel::Learned(_), bounds) => {
                let (agg_mode, clip, monotone) = match bounds {
                    Some(b) => (
                        b.mode().tag(),
                        b.flags.clip_nonneg,
                        b.flags.restore_monotone,
                    ),
                    None => ("-", true, true),
                };
                Provenance {
                    run_id: run_id.into(),
                    dataset: dataset.into(),
                    model_type: artifact.model.kind().into(),
                    config_hash: config_hash(&(
                        artifact.model.kind(),
                        artifact.k_max,
                        agg_mode,
                        clip,
                        monotone,
                        artifact.fingerprint,
                    )),
                    seed: 0,
                    agg_mode: agg_mode.into(),
                    clip,
                    monotone,
                    sample_weights: "-".into(),
                    iterations: 0,
                }
            }
        }
    }
}

/// Candidate-set metrics at one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub k: usize,
    pub mean_css: f64,
    pub max_css: u64,
}

/// Full evaluation of one artifact over a query set.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub provenance: Provenance,
    /// One entry per evaluated k, in the order given.
    pub rows: Vec<EvalRow>,
    /// Mean CSS over every (query, k) pair.
    pub mean_css: f64,
    /// Largest CSS seen at any (query, k).
    pub max_css: u64,
    pub param_count: usize,
    pub wall_ms: f64,
}

impl EvalReport {
    /// The flat CSV row for this report.
    pub fn to_row(&self) -> MetricsRow {
        let p = &self.provenance;
        MetricsRow {
            run_id: p.run_id.clone(),
            dataset: p.dataset.clone(),
            model_type: p.model_type.clone(),
            config_hash: p.config_hash.clone(),
            seed: p.seed,
            agg_mode: p.agg_mode.clone(),
            clip: p.clip,
            monotone: p.monotone,
            sample_weights: p.sample_weights.clone(),
            iterations: p.iterations,
            param_count: self.param_count,
            mean_css: self.mean_css,
            max_css: self.max_css,
            wall_ms: self.wall_ms,
        }
    }
}

/// Runs `RkNN(x_i, k)` for every selected query point and every `k ∈ ks`
/// (self excluded, refinement included) and reports candidate-set sizes.
/// Deterministic: the parallel query schedule cannot change any count.
pub fn evaluate(
    artifact: &IndexArtifact,
    ds: &Dataset,
    ks: &[usize],
    queries: &QuerySet,
    provenance: Provenance,
) -> Result<EvalReport> {
    if ks.is_empty() {
        return Err(Error::InvalidConfig("ks must not be empty".into()));
    }
    for &k in ks {
        if k == 0 || k > artifact.k_max {
            return Err(Error::KOutOfRange {
                k,
                k_max: artifact.k_max,
            });
        }
    }
    let start = Instant::now();
    let prep = PreparedIndex::prepare(artifact, ds)?;
    let queries = queries.resolve(ds.n());
    let mut rows = Vec::with_capacity(ks.len());
    let mut total: u64 = 0;
    let mut max_css: u64 = 0;
    for &k in ks {
        let css: Vec<u64> = queries
            .par_iter()
            .map(|&qi| {
                prep.query(ds.point(qi), k, Some(qi))
                    .map(|r| r.stats.candidates as u64)
            })
            .collect::<Result<_>>()?;
        let sum: u64 = css.iter().sum();
        let worst = css.iter().copied().max().unwrap_or(0);
        rows.push(EvalRow {
            k,
            mean_css: sum as f64 / css.len().max(1) as f64,
            max_css: worst,
        });
        total += sum;
        max_css = max_css.max(worst);
    }
    let mean_css = total as f64 / (queries.len().max(1) * ks.len()) as f64;
    Ok(EvalReport {
        provenance,
        rows,
        mean_css,
        max_css,
        param_count: artifact.param_count(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// The 12-row ablation grid: sample weighting on/off × aggregation
/// {K, D, KD} × monotonicity restoration on/off.
///
/// One model is trained per weighting setting (off = a single uniform fit;
/// on = the base config's re-weighting loop, run with the base aggregation)
/// and all six bound variants are rebuilt from that same fitted model, so
/// within a weighting half the grid isolates exactly the bound choices:
/// KD rows can never admit more candidates than their K/D siblings, and
/// monotone rows never more than their non-monotone twins.
pub fn ablation_grid(
    ds: &Dataset,
    table: &KDistTable,
    base: &TrainConfig,
    ks: &[usize],
    queries: &QuerySet,
    run_id: &str,
    dataset_name: &str,
) -> Result<Vec<EvalReport>> {
    let mut reports = Vec::with_capacity(12);
    for weighted in [false, true] {
        let mut cfg = base.clone();
        if !weighted {
            cfg.weight_source = WeightSource::Uniform;
            cfg.iterations = 1;
        }
        let trained = train_reweighted(ds, table, &cfg)?;
        let (model, zscore, norm) = match (
            &trained.artifact.model,
            &trained.artifact.zscore,
            &trained.artifact.kdist_norm,
        ) {
            (IndexModel::Learned(m), Some(z), Some(n)) => (m.clone(), z.clone(), n.clone()),
            _ => unreachable!("train_reweighted builds learned artifacts"),
        };
        for mode in BoundMode::ALL {
            for monotone in [false, true] {
                let flags = BoundFlags {
                    clip_nonneg: base.flags.clip_nonneg,
                    restore_monotone: monotone,
                };
                let artifact = build_learned_artifact(
                    ds,
                    table,
                    zscore.clone(),
                    norm.clone(),
                    model.clone(),
                    mode,
                    flags,
                )?;
                let mut row_cfg = cfg.clone();
                row_cfg.mode = mode;
                row_cfg.flags = flags;
                let provenance = Provenance::from_train(run_id, dataset_name, &row_cfg);
                reports.push(evaluate(&artifact, ds, ks, queries, provenance)?);
            }
        }
    }
    Ok(reports)
}

/// Column order of the metrics CSV; stable schema, validated on append.
pub const METRICS_COLUMNS: [&str; 14] = [
    "run_id",
    "dataset",
    "model_type",
    "config_hash",
    "seed",
    "agg_mode",
    "clip",
    "monotone",
    "sample_weights",
    "iterations",
    "param_count",
    "mean_css",
    "max_css",
    "wall_ms",
];

/// One line of the metrics CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub dataset: String,
    pub model_type: String,
    pub config_hash: String,
    pub seed: u64,
    pub agg_mode: String,
    pub clip: bool,
    pub monotone: bool,
    pub sample_weights: String,
    pub iterations: usize,
    pub param_count: usize,
    pub mean_css: f64,
    pub max_css: u64,
    pub wall_ms: f64,
}

fn metrics_err(path: &Path, e: csv::Error) -> Error {
    Error::Metrics(format!("{}: {e}", path.display()))
}

fn check_header(path: &Path) -> Result<()> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| metrics_err(path, e))?;
    let headers = reader.headers().map_err(|e| metrics_err(path, e))?;
    if headers.iter().ne(METRICS_COLUMNS) {
        return Err(Error::Metrics(format!(
            "{} has a different column schema; expected {}",
            path.display(),
            METRICS_COLUMNS.join(",")
        )));
    }
    Ok(())
}

/// Appends rows to the metrics CSV, creating it (with header) when absent.
/// Appending to a file with a different schema is refused.
pub fn append_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let has_content = fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
    if has_content {
        check_header(path)?;
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(!has_content)
        .from_writer(file);
    for row in rows {
        writer.serialize(row).map_err(|e| metrics_err(path, e))?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads the whole metrics CSV back.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    check_header(path)?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| metrics_err(path, e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| metrics_err(path, e)))
        .collect()
}

fn dominates(a: &MetricsRow, b: &MetricsRow) -> bool {
    a.param_count <= b.param_count
        && a.mean_css <= b.mean_css
        && (a.param_count < b.param_count || a.mean_css < b.mean_css)
}

/// Pareto-optimal rows in the (param_count, mean_css) plane: every returned
/// row is undominated, exact ties are kept, and the result is sorted by
/// size ascending (mean CSS as tiebreak).
pub fn skyline(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut keep: Vec<MetricsRow> = rows
        .iter()
        .filter(|a| !rows.iter().any(|b| dominates(b, a)))
        .cloned()
        .collect();
    keep.sort_by(|x, y| {
        x.param_count
            .cmp(&y.param_count)
            .then(x.mean_css.total_cmp(&y.mean_css))
            .then_with(|| x.run_id.cmp(&y.run_id))
    });
    keep
}

/// One Gaussian blob of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub center: Vec<Real>,
    pub sigma: Real,
    pub n: usize,
}

/// Mixture of Gaussian blobs over a uniform background — controllable
/// density contrast, so k-distance curves show the knees that break
/// log-log-linear models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub blobs: Vec<BlobSpec>,
    /// Uniformly distributed points over `[0, extent]^dim`.
    pub background: usize,
    pub extent: Real,
    #[serde(default = "euclidean")]
    pub metric: Metric,
}

fn euclidean() -> Metric {
    Metric::Euclidean
}

impl SyntheticSpec {
    /// Road-network-style stand-in: 2-d settlements whose densities span
    /// more than an order of magnitude, plus a sparse countryside.
    pub fn road_like(n: usize) -> Self {
        let centers: [[Real; 2]; 8] = [
            [12.0, 18.0],
            [78.0, 15.0],
            [45.0, 42.0],
            [88.0, 70.0],
            [22.0, 75.0],
            [60.0, 88.0],
            [35.0, 12.0],
            [70.0, 45.0],
        ];
        let sigmas: [Real; 8] = [0.4, 0.8, 1.4, 2.2, 3.5, 5.0, 7.5, 10.0];
        let clustered = n * 3 / 4;
        let per_blob = clustered / 8;
        let mut blobs: Vec<BlobSpec> = centers
            .iter()
            .zip(sigmas)
            .map(|(c, sigma)| BlobSpec {
                center: c.to_vec(),
                sigma,
                n: per_blob,
            })
            .collect();
        blobs[7].n += clustered - per_blob * 8;
        SyntheticSpec {
            dim: 2,
            blobs,
            background: n - clustered,
            extent: 100.0,
            metric: Metric::Euclidean,
        }
    }

    pub fn total_points(&self) -> usize {
        self.blobs.iter().map(|b| b.n).sum::<usize>() + self.background
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if self.total_points() < 2 {
            return Err(Error::InvalidSpec("need at least 2 points".into()));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::InvalidSpec(
                "extent must be positive and finite".into(),
            ));
        }
        for (i, blob) in self.blobs.iter().enumerate() {
            if blob.center.len() != self.dim {
                return Err(Error::InvalidSpec(format!(
                    "blob {i}: center has {} coordinates, dim is {}",
                    blob.center.len(),
                    self.dim
                )));
            }
            if !(blob.sigma.is_finite() && blob.sigma > 0.0)
                || blob.center.iter().any(|c| !c.is_finite())
            {
                return Err(Error::InvalidSpec(format!(
                    "blob {i}: sigma and center must be finite, sigma positive"
                )));
            }
        }
        Ok(())
    }
}

/// Generates the spec's mixture; the same seed reproduces the dataset bit
/// for bit (blobs are drawn in order, then the background).
pub fn make_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(spec.total_points());
    for blob in &spec.blobs {
        for _ in 0..blob.n {
            rows.push(
                blob.center
                    .iter()
                    .map(|&c| c + blob.sigma * rng.sample::<Real, _>(StandardNormal))
                    .collect(),
            );
        }
    }
    for _ in 0..spec.background {
        rows.push(
            (0..spec.dim)
                .map(|_| rng.gen::<Real>() * spec.extent)
                .collect(),
        );
    }
    Dataset::from_rows(rows, spec.metric)
}

/// Best log-log line fit to one point's k-distance row: returns
/// `(max |residual|, R²)`. A near-power-law row has R² close to 1; a row
/// with a density knee leaves a large residual no line can absorb.
pub fn loglog_fit(table: &KDistTable, p: usize) -> Result<(Real, Real)> {
    let k_max = table.k_max();
    let xs: Vec<Real> = (1..=k_max).map(|k| (k as Real).ln()).collect();
    let ys: Vec<Real> = (1..=k_max)
        .map(|k| table.get(p, k).map(|v| v.max(LN_FLOOR).ln()))
        .collect::<Result<_>>()?;
    let (slope, icept) = ols(&xs, &ys);
    let mut worst: Real = 0.0;
    let mut sse = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (slope * x + icept);
        worst = worst.max(r.abs());
        sse += r * r;
    }
    let ym = ys.iter().sum::<Real>() / k_max as Real;
    let sst: Real = ys.iter().map(|&y| (y - ym) * (y - ym)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    Ok((worst, r2))
}

/// One labelled point cloud of the trade-off plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    /// `(param_count, mean_css)` pairs.
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Self-contained SVG scatter of candidate set size against index size,
/// log-log, one color per series. The CSV stays the source of truth; this
/// is a derived view.
pub fn scatter_svg(series: &[PlotSeries], title: &str) -> String {
    const W: f64 = 760.0;
    const H: f64 = 520.0;
    const ML: f64 = 70.0; // margins: left, right, top, bottom
    const MR: f64 = 30.0;
    const MT: f64 = 40.0;
    const MB: f64 = 55.0;

    // Log-log window over all finite points; CSS 0 is floored to 0.1 so
    // perfect filters stay visible on the bottom edge.
    let floor_css = 0.1;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(size, css) in &s.points {
            xs.push(size.max(1.0).log10());
            ys.push(css.max(floor_css).log10());
        }
    }
    let (x_lo, x_hi) = span(&xs);
    let (y_lo, y_hi) = span(&ys);
    let sx = |v: f64| ML + (v - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let sy = |v: f64| H - MB - (v - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));
    // Axes box.
    out.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));
    // Decade gridlines and tick labels.
    for e in (x_lo.floor() as i64)..=(x_hi.ceil() as i64) {
        let v = e as f64;
        if v < x_lo || v > x_hi {
            continue;
        }
        let x = sx(v);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{MT}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n",
            H - MB
        ));
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{e}</text>\n",
            H - MB + 18.0
        ));
    }
    for e in (y_lo.floor() as i64)..=(y_hi.ceil() as i64) {
        let v = e as f64;
        if v < y_lo || v > y_hi {
            continue;
        }
        let y = sy(v);
        out.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            W - MR
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{e}</text>\n",
            ML - 8.0,
            y + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">index size (parameters)</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">mean candidate set size</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    ));
    // Points and legend.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &(size, css) in &s.points {
            let x = sx(size.max(1.0).log10());
            let y = sy(css.max(floor_css).log10());
            out.push_str(&format!(
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n"
            ));
        }
        let ly = MT + 16.0 + 18.0 * si as f64;
        out.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{color}\"/>\n",
            W - MR - 150.0,
            ly - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n",
            W - MR - 140.0,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Padded data window; degenerate spans widen to ±half a decade.
fn span(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.06;
    (lo - pad, hi + pad)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
