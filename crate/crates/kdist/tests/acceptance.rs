//! Acceptance gate: one test per shipping criterion, each ending in a single
//! PASS line with its measured evidence. Criteria cover exactness of query
//! results, completeness of the learned bounds, the worked aggregation
//! example, orderings between bound variants, the perfect-model fixed point,
//! gradient correctness, search-vs-baseline parity, the non-linearity
//! motivation, and serialization accounting.

use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdist::bench::{loglog_fit, make_synthetic, BlobSpec, SyntheticSpec};
use kdist::bounds::{aggregate, BoundFlags, BoundMode, ResidualMatrix};
use kdist::cop::fit_cop;
use kdist::dataset::{load_dataset, Dataset, DatasetFormat, Metric};
use kdist::engine::{
    build_learned_artifact, load_index, save_index, IndexArtifact, IndexModel, PreparedIndex,
};
use kdist::normalize::{
    kdist_norm_apply_table, kdist_norm_fit, zscore_apply_all, zscore_fit, KDistNormParams,
    ZScoreParams,
};
use kdist::oracle::build_kdist_table;
use kdist::regress::mlp::{gradient_check, Loss, MlpConfig};
use kdist::regress::tree::TreeConfig;
use kdist::regress::{fit_model, KDistModel, ModelConfig, TrainedModel};
use kdist::table::KDistTable;
use kdist::trainer::{random_search, train_reweighted, SearchSpace, TrainConfig};
use kdist::Real;

const K_MAX: usize = 32;
const EXACT_KS: [usize; 5] = [1, 2, 4, 8, 16];

// ------------------------------------------------------------------ fixture

struct FittedParts {
    zscore: ZScoreParams,
    norm: KDistNormParams,
    model: TrainedModel,
}

fn fit_parts(ds: &Dataset, table: &KDistTable, config: &ModelConfig, seed: u64) -> FittedParts {
    let zscore = zscore_fit(ds.points());
    let inputs = zscore_apply_all(&zscore, ds).expect("inputs");
    let norm = kdist_norm_fit(table);
    let targets = kdist_norm_apply_table(&norm, table).expect("targets");
    let weights = Array2::ones(targets.dim());
    let model = fit_model(
        config,
        &inputs.view(),
        &targets.view(),
        &weights.view(),
        seed,
    )
    .expect("fit");
    FittedParts {
        zscore,
        norm,
        model,
    }
}

fn variant(
    parts: &FittedParts,
    set: &ModelSet,
    mode: BoundMode,
    flags: BoundFlags,
) -> IndexArtifact {
    build_learned_artifact(
        &set.ds,
        &set.table,
        parts.zscore.clone(),
        parts.norm.clone(),
        parts.model.clone(),
        mode,
        flags,
    )
    .expect("artifact")
}

struct ModelSet {
    name: String,
    ds: Dataset,
    table: KDistTable,
    tree: FittedParts,
    mlp: FittedParts,
    /// Every artifact under test: tree and network each in all 3 aggregation
    /// modes x all 4 flag combinations, plus the baseline with and without
    /// monotonicity restoration — 26 in total.
    variants: Vec<(String, IndexArtifact)>,
}

fn build_set(name: &str, ds: Dataset) -> ModelSet {
    let table = build_kdist_table(&ds, K_MAX).expect("table");
    let tree_cfg = ModelConfig::DecisionTree(TreeConfig {
        max_depth: Some(10),
        min_samples_split: 2,
    });
    let mlp_cfg = ModelConfig::Mlp(MlpConfig {
        hidden: vec![32, 32],
        batch_size: 256,
        lr: 0.05,
        epochs: 60,
        dropout: 0.0,
        loss: Loss::Mse,
    });
    let mut set = ModelSet {
        name: name.into(),
        tree: fit_parts(&ds, &table, &tree_cfg, 1),
        mlp: fit_parts(&ds, &table, &mlp_cfg, 1),
        variants: Vec::new(),
        ds,
        table,
    };
    let mut variants = Vec::new();
    for (kind, parts) in [("tree", &set.tree), ("mlp", &set.mlp)] {
        for mode in BoundMode::ALL {
            for (clip, mono) in BoundFlags::ALL {
                let flags = BoundFlags {
                    clip_nonneg: clip,
                    restore_monotone: mono,
                };
                variants.push((
                    format!("{kind}/{}/clip={clip},mono={mono}", mode.tag()),
                    variant(parts, &set, mode, flags),
                ));
            }
        }
    }
    let cop = fit_cop(&set.table).expect("baseline fit");
    for mono in [false, true] {
        let mut model = cop.clone();
        model.restore_monotone = mono;
        variants.push((
            format!("cop/mono={mono}"),
            IndexArtifact::cop(model, set.ds.fingerprint()),
        ));
    }
    set.variants = variants;
    set
}

fn blob_dataset() -> Dataset {
    let spec = SyntheticSpec {
        dim: 2,
        blobs: vec![
            BlobSpec {
                center: vec![20.0, 20.0],
                sigma: 4.0,
                n: 500,
            },
            BlobSpec {
                center: vec![70.0, 30.0],
                sigma: 6.0,
                n: 500,
            },
            BlobSpec {
                center: vec![40.0, 70.0],
                sigma: 5.0,
                n: 500,
            },
        ],
        background: 500,
        extent: 100.0,
        metric: Metric::Euclidean,
    };
    make_synthetic(&spec, 3).expect("blobs")
}

/// The road-network dataset: the classic 6105-node file when present,
/// otherwise a synthetic road-like stand-in of identical size and shape.
fn road_dataset() -> (Dataset, &'static str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/oldenburg.node");
    if path.is_file() {
        let ds = load_dataset(&path, DatasetFormat::RoadNetworkNodes, Metric::Euclidean)
            .expect("road node file");
        (ds, "oldenburg node file")
    } else {
        let ds = make_synthetic(&SyntheticSpec::road_like(6105), 11).expect("road stand-in");
        (ds, "synthetic road-like stand-in (no data/oldenburg.node)")
    }
}

struct Fixture {
    blobs: ModelSet,
    road_sample: ModelSet,
    road_full: Dataset,
    road_source: &'static str,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let (road_full, road_source) = road_dataset();
        let sample = road_full.subsample(3000, 7).expect("subsample");
        Fixture {
            blobs: build_set("blobs", blob_dataset()),
            road_sample: build_set("road", sample),
            road_full,
            road_source,
        }
    })
}

// ------------------------------------------------------------------ helpers

/// Reverse-k-nearest-neighbors by definition: every object whose k-distance
/// reaches back to the query. Ground truth comes from the exact table.
fn rknn_bruteforce(
    ds: &Dataset,
    table: &KDistTable,
    q: &[Real],
    k: usize,
    skip: Option<usize>,
) -> Vec<usize> {
    (0..ds.n())
        .filter(|&o| skip != Some(o))
        .filter(|&o| ds.dist_to(q, o) <= table.get(o, k).expect("k in range"))
        .collect()
}

/// Seeded uniform queries over the dataset's bounding box.
fn random_queries(ds: &Dataset, m: usize, seed: u64) -> Vec<Vec<Real>> {
    let dim = ds.dim();
    let mut lo = vec![Real::INFINITY; dim];
    let mut hi = vec![Real::NEG_INFINITY; dim];
    for p in ds.points() {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..dim).map(|d| rng.gen_range(lo[d]..=hi[d])).collect())
        .collect()
}

fn mean_of(css: &Array2<u64>) -> f64 {
    css.iter().map(|&v| v as f64).sum::<f64>() / css.len() as f64
}

// ----------------------------------------------------------------- criteria

#[test]
fn criterion_1_exact_query_results_for_every_variant() {
    let start = Instant::now();
    let f = fixture();
    let mut checked = 0usize;
    for set in [&f.blobs, &f.road_sample] {
        let queries = random_queries(&set.ds, 100, 42);
        for (label, artifact) in &set.variants {
            let prep = PreparedIndex::prepare(artifact, &set.ds).expect("prepare");
            for q in &queries {
                for &k in &EXACT_KS {
                    let got = prep.query(q, k, None).expect("query").indices;
                    let want = rknn_bruteforce(&set.ds, &set.table, q, k, None);
                    assert_eq!(got, want, "result mismatch: {} {} k={}", set.name, label, k);
                    checked += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(
        secs < 300.0,
        "exactness sweep took {secs:.1} s, budget 300 s"
    );
    println!(
        "criterion 1 (exactness): PASS — {checked} queries across 52 variants, \
         0 mismatches, {secs:.1} s"
    );
}

#[test]
fn criterion_2_bounds_are_complete_for_every_variant() {
    let f = fixture();
    let mut cells = 0usize;
    for set in [&f.blobs, &f.road_sample] {
        for (label, artifact) in &set.variants {
            let prep = PreparedIndex::prepare(artifact, &set.ds).expect("prepare");
            for p in 0..set.ds.n() {
                for k in 1..=K_MAX {
                    let truth = set.table.get(p, k).expect("truth");
                    let (lb, ub) = (prep.lb(p, k), prep.ub(p, k));
                    assert!(
                        lb <= truth && truth <= ub,
                        "{} {}: bound violation at ({p},{k}): {lb} !<= {truth} !<= {ub}",
                        set.name,
                        label
                    );
                    cells += 1;
                }
            }
        }
    }
    println!("criterion 2 (bound completeness): PASS — {cells} cells, 0 violations");
}

#[test]
fn criterion_3_worked_aggregation_example() {
    // The worked 6-point, k_max = 4 residual matrix; upper deltas must come
    // out exactly as the hand calculation.
    let residuals = ResidualMatrix::new(array![
        [0.0, 0.0, -1.0, 0.0],
        [0.0, -2.0, 2.0, 0.0],
        [0.0, -1.0, 2.0, 0.0],
        [1.0, 1.0, -1.0, -1.0],
        [-1.0, 0.0, -1.0, 2.0],
        [2.0, -2.0, 0.0, 1.0],
    ])
    .expect("matrix");
    let per_point = aggregate(&residuals, BoundMode::OverK, BoundFlags::none());
    let upper_per_point: Vec<Real> = (0..6).map(|p| per_point.delta_hi(p, 1)).collect();
    assert_eq!(upper_per_point, vec![0.0, 2.0, 2.0, 1.0, 2.0, 2.0]);
    let per_k = aggregate(&residuals, BoundMode::OverPoints, BoundFlags::none());
    let upper_per_k: Vec<Real> = (1..=4).map(|k| per_k.delta_hi(0, k)).collect();
    assert_eq!(upper_per_k, vec![2.0, 1.0, 2.0, 2.0]);
    println!(
        "criterion 3 (aggregation example): PASS — per-point [0,2,2,1,2,2], \
         per-k [2,1,2,2], exact"
    );
}

#[test]
fn criterion_4_variant_orderings_hold_per_query() {
    let f = fixture();
    let set = &f.blobs;
    let mut summaries = Vec::new();
    for (kind, parts) in [("tree", &set.tree), ("mlp", &set.mlp)] {
        let css = |mode: BoundMode, clip: bool, mono: bool| -> Array2<u64> {
            let flags = BoundFlags {
                clip_nonneg: clip,
                restore_monotone: mono,
            };
            PreparedIndex::prepare(&variant(parts, set, mode, flags), &set.ds)
                .expect("prepare")
                .css_matrix()
        };
        let combined = css(BoundMode::Combined, true, true);
        let over_k = css(BoundMode::OverK, true, true);
        let over_p = css(BoundMode::OverPoints, true, true);
        let no_mono = css(BoundMode::Combined, true, false);
        let no_clip = css(BoundMode::Combined, false, true);
        for (q, k) in ndarray::indices(combined.dim()) {
            let c = combined[(q, k)];
            assert!(
                c <= over_k[(q, k)] && c <= over_p[(q, k)],
                "{kind}: combined aggregation admitted more candidates at query {q}, k {}",
                k + 1
            );
            assert!(
                c <= no_mono[(q, k)],
                "{kind}: monotonicity restoration lost candidates at query {q}, k {}",
                k + 1
            );
            assert!(
                c <= no_clip[(q, k)],
                "{kind}: clipping lost candidates at query {q}, k {}",
                k + 1
            );
        }
        summaries.push(format!(
            "{kind} mean CSS: combined {:.2} <= per-point-only {:.2} / per-k-only {:.2}, \
             no-mono {:.2}, no-clip {:.2}",
            mean_of(&combined),
            mean_of(&over_k),
            mean_of(&over_p),
            mean_of(&no_mono),
            mean_of(&no_clip)
        ));
    }
    println!(
        "criterion 4 (variant orderings): PASS — per-query dominance on every cell; {}",
        summaries.join("; ")
    );
}

#[test]
fn criterion_5_perfect_model_fixed_point() {
    let start = Instant::now();
    // 500 distinct points on an integer line, k_max = 4: every normalized
    // target is a small dyadic rational, so the whole pipeline is bit-exact
    // and a depth-unbounded tree memorizes the table perfectly.
    let k_max = 4;
    let ds = Dataset::from_rows(
        (0..500).map(|i| vec![i as Real]).collect(),
        Metric::Euclidean,
    )
    .expect("line");
    let table = build_kdist_table(&ds, k_max).expect("table");
    let config = ModelConfig::DecisionTree(TreeConfig {
        max_depth: None,
        min_samples_split: 2,
    });
    let parts = fit_parts(&ds, &table, &config, 0);

    // All-zero residuals.
    let inputs = zscore_apply_all(&parts.zscore, &ds).expect("inputs");
    let predictions = parts.model.predict_batch(&inputs.view()).expect("predict");
    let targets = kdist_norm_apply_table(&parts.norm, &table).expect("targets");
    let residuals =
        ResidualMatrix::from_predictions(&predictions.view(), &targets.view()).expect("residuals");
    assert!(
        residuals.values().iter().all(|&v| v == 0.0),
        "memorizing tree must leave exactly zero residuals"
    );

    // Zero-width bounds that sit exactly on the truth.
    let artifact = build_learned_artifact(
        &ds,
        &table,
        parts.zscore.clone(),
        parts.norm.clone(),
        parts.model.clone(),
        BoundMode::Combined,
        BoundFlags::default(),
    )
    .expect("artifact");
    let prep = PreparedIndex::prepare(&artifact, &ds).expect("prepare");
    for p in 0..ds.n() {
        for k in 1..=k_max {
            let truth = table.get(p, k).expect("truth");
            assert_eq!(prep.lb(p, k), truth, "lb({p},{k}) is not zero-width");
            assert_eq!(prep.ub(p, k), truth, "ub({p},{k}) is not zero-width");
        }
    }

    // Zero candidates everywhere.
    let css = prep.css_matrix();
    assert_eq!(css.iter().copied().max(), Some(0), "max CSS must be 0");

    // Re-weighting is a fixed point after the first round.
    let mut cfg = TrainConfig::new(config, k_max);
    cfg.iterations = 1;
    let one = train_reweighted(&ds, &table, &cfg).expect("one round");
    cfg.iterations = 2;
    let two = train_reweighted(&ds, &table, &cfg).expect("two rounds");
    assert_eq!(one.css_trace, vec![0.0]);
    assert_eq!(two.css_trace, vec![0.0, 0.0]);
    assert_eq!(
        one.artifact, two.artifact,
        "a second re-weighting round must reproduce the same artifact"
    );

    let secs = start.elapsed().as_secs_f64();
    assert!(
        secs < 30.0,
        "fixed-point check took {secs:.1} s, budget 30 s"
    );
    println!(
        "criterion 5 (perfect-model fixed point): PASS — zero residuals, zero-width \
         bounds, mean/max CSS 0/0, fixed point after round 1, {secs:.1} s"
    );
}

#[test]
fn criterion_6_network_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let layers = rng.gen_range(1..=3);
        let hidden: Vec<usize> = (0..layers).map(|_| rng.gen_range(2..=8)).collect();
        let report = gradient_check(&hidden, Loss::Mse, 1000 + trial, 1e-6);
        assert!(
            report.checked > 0,
            "network {hidden:?} checked no parameters"
        );
        assert!(
            report.max_rel_err < 1e-5,
            "network {hidden:?}: max relative error {} >= 1e-5",
            report.max_rel_err
        );
        worst = worst.max(report.max_rel_err);
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "gradient checks took {secs:.1} s, budget 10 s");
    println!(
        "criterion 6 (gradient check): PASS — 10 networks, worst relative error \
         {worst:.2e} < 1e-5, {secs:.1} s"
    );
}

#[test]
fn criterion_7_search_beats_the_baseline_on_size_and_css() {
    let start = Instant::now();
    let f = fixture();
    let ds = &f.road_full;
    let table = build_kdist_table(ds, K_MAX).expect("table");

    let cop = IndexArtifact::cop(fit_cop(&table).expect("baseline"), ds.fingerprint());
    let cop_size = cop.param_count();
    assert_eq!(
        cop_size,
        4 * ds.n(),
        "baseline stores four scalars per point"
    );
    let cop_mean = mean_of(
        &PreparedIndex::prepare(&cop, ds)
            .expect("prepare baseline")
            .css_matrix(),
    );

    let space = SearchSpace::default();
    let hunt = |seed: u64| -> (usize, Option<(usize, usize, f64)>) {
        let trials = random_search(ds, &table, &space, 50, seed).expect("search");
        let succeeded = trials.iter().filter(|t| t.outcome.is_ok()).count();
        let winner = trials
            .iter()
            .filter_map(|t| t.outcome.as_ref().ok().map(|o| (t.trial, o)))
            .filter(|(_, o)| o.param_count < cop_size && o.mean_css < cop_mean)
            .map(|(t, o)| (t, o.param_count, o.mean_css))
            .min_by(|a, b| a.2.total_cmp(&b.2));
        (succeeded, winner)
    };

    let (succeeded, mut winner) = hunt(0);
    let mut note = format!("seed 0, {succeeded}/50 trials trained");
    if winner.is_none() {
        // Documented reseed: the first seed produced no qualifying artifact.
        println!("criterion 7: seed 0 had no qualifying artifact; documented reseed to 1");
        let (s1, w1) = hunt(1);
        note = format!("reseeded to 1 after a miss on seed 0, {s1}/50 trials trained");
        winner = w1;
    }
    let (trial, size, css) = winner.expect(
        "no searched artifact beat the baseline on both size and candidates (after one reseed)",
    );
    let secs = start.elapsed().as_secs_f64();
    assert!(
        secs < 1800.0,
        "search parity took {secs:.1} s, budget 1800 s"
    );
    println!(
        "criterion 7 (baseline parity, {}): PASS — trial {trial}: {size} params < {cop_size} \
         and mean CSS {css:.2} < baseline {cop_mean:.2}; {note}; {secs:.0} s",
        f.road_source
    );
}

#[test]
fn criterion_8_density_contrast_defeats_the_line_fit() {
    let start = Instant::now();
    let n = 300;
    let sparse = BlobSpec {
        center: vec![45.0, 40.0],
        sigma: 10.0,
        n: 270,
    };

    // Control: one blob alone, same total size. Its per-point worst
    // log-log line-fit residual is summarized by the median point.
    let single = SyntheticSpec {
        dim: 2,
        blobs: vec![BlobSpec {
            n,
            ..sparse.clone()
        }],
        background: 0,
        extent: 80.0,
        metric: Metric::Euclidean,
    };
    let ds = make_synthetic(&single, 5).expect("single blob");
    let table = build_kdist_table(&ds, K_MAX).expect("table");
    let mut control: Vec<Real> = (0..n)
        .map(|p| loglog_fit(&table, p).expect("fit").0)
        .collect();
    control.sort_by(Real::total_cmp);
    let control = control[n / 2];

    // Contrast: a tight 30-point cluster whose neighborhoods must jump to
    // the far blob once k exceeds the cluster, bending every curve.
    let two = SyntheticSpec {
        dim: 2,
        blobs: vec![
            BlobSpec {
                center: vec![5.0, 5.0],
                sigma: 0.1,
                n: 30,
            },
            sparse,
        ],
        background: 0,
        extent: 80.0,
        metric: Metric::Euclidean,
    };
    let ds = make_synthetic(&two, 5).expect("two blobs");
    let table = build_kdist_table(&ds, K_MAX).expect("table");
    let bent = (0..n)
        .filter(|&p| loglog_fit(&table, p).expect("fit").0 >= 3.0 * control)
        .count();
    let needed = n.div_ceil(20); // 5 % of the points
    let secs = start.elapsed().as_secs_f64();
    assert!(
        bent >= needed,
        "only {bent}/{n} points exceed 3x the control residual {control:.3}, need {needed}"
    );
    assert!(
        secs < 60.0,
        "non-linearity check took {secs:.1} s, budget 60 s"
    );
    println!(
        "criterion 8 (non-linearity): PASS — {bent}/{n} points ({:.0}%) exceed 3x the \
         single-blob control residual {control:.3}, {secs:.1} s",
        100.0 * bent as f64 / n as f64
    );
}

/// Independent byte-level scalar count of a serialized artifact, following
/// the documented container layout. Returns (z-score, normalizer, model,
/// bound-delta) scalar counts.
fn serialized_scalar_counts(bytes: &[u8]) -> (usize, usize, usize, usize) {
    fn u64_at(b: &[u8], off: usize) -> usize {
        u64::from_le_bytes(b[off..off + 8].try_into().unwrap()) as usize
    }
    assert_eq!(&bytes[..4], b"LKDI", "container magic");
    let mut off = 4 + 1 + 8; // magic, version, k_max
    let mut section = || -> &[u8] {
        let len = u64_at(bytes, off);
        let payload = &bytes[off + 8..off + 8 + len];
        off += 8 + len;
        payload
    };
    let count_plain = |payload: &[u8], header: usize| {
        if payload.is_empty() {
            0
        } else {
            (payload.len() - header) / 8
        }
    };
    let zscore = count_plain(section(), 8);
    let norm = count_plain(section(), 8);
    let model_payload = section();
    let model = match &model_payload[..4] {
        b"TRE1" => {
            let k_max = u64_at(model_payload, 12);
            let node_count = u64_at(model_payload, 20);
            let mut pos = 32; // tag, input_dim, k_max, node count, root
            let mut scalars = 0;
            for _ in 0..node_count {
                let kind = model_payload[pos];
                pos += 1;
                if kind == 0 {
                    scalars += 2; // split: feature index + threshold
                    pos += 4 + 8 + 4 + 4;
                } else {
                    scalars += k_max; // leaf: one value per output
                    pos += 8 * k_max;
                }
            }
            assert_eq!(pos, model_payload.len(), "tree payload fully consumed");
            scalars
        }
        b"MLP1" => {
            let layer_count = u64_at(model_payload, 20);
            let mut pos = 28;
            let mut scalars = 0;
            for _ in 0..layer_count {
                let fan_in = u64_at(model_payload, pos);
                let fan_out = u64_at(model_payload, pos + 8);
                let layer = fan_in * fan_out + fan_out;
                scalars += layer;
                pos += 16 + 4 * layer;
            }
            assert_eq!(pos, model_payload.len(), "network payload fully consumed");
            scalars
        }
        b"COP1" => (model_payload.len() - 21) / 8,
        tag => panic!("unknown model tag {tag:?}"),
    };
    let bounds = count_plain(section(), 18);
    (zscore, norm, model, bounds)
}

#[test]
fn criterion_9_round_trip_and_size_accounting() {
    let f = fixture();
    let set = &f.blobs;
    let n = set.ds.n();
    let dir = tempfile::tempdir().expect("tempdir");
    let picks: Vec<&(String, IndexArtifact)> = ["tree/KD/", "mlp/K/", "cop/mono=true"]
        .iter()
        .map(|prefix| {
            set.variants
                .iter()
                .find(|(label, _)| label.starts_with(prefix))
                .expect("variant present")
        })
        .collect();
    let mut reports = Vec::new();
    for (label, artifact) in picks {
        let path = dir.path().join(label.replace('/', "_"));
        save_index(artifact, &path).expect("save");
        let loaded = load_index(&path).expect("load");
        assert_eq!(&loaded, artifact, "{label}: save/load must be bit-exact");

        let bytes = std::fs::read(&path).expect("raw bytes");
        let (zs, nm, model, deltas) = serialized_scalar_counts(&bytes);
        let total = zs + nm + model + deltas;
        assert_eq!(
            artifact.param_count(),
            total,
            "{label}: reported size != serialized scalar count"
        );
        match &artifact.model {
            IndexModel::Learned(m) => {
                assert_eq!(zs, 2 * set.ds.dim(), "{label}: z-score stores 2d scalars");
                assert_eq!(nm, 2 * K_MAX, "{label}: normalizer stores 2*k_max scalars");
                assert_eq!(model, m.param_count(), "{label}: model scalar count");
                let expected_deltas = match artifact.bounds.as_ref().map(|b| b.mode()) {
                    Some(BoundMode::OverPoints) => 2 * K_MAX,
                    Some(BoundMode::OverK) => 2 * n,
                    Some(BoundMode::Combined) => 2 * (n + K_MAX),
                    None => 0,
                };
                assert_eq!(deltas, expected_deltas, "{label}: delta accounting");
            }
            IndexModel::Cop(_) => {
                assert_eq!((zs, nm, deltas), (0, 0, 0), "baseline stores only lines");
                assert_eq!(model, 4 * n, "baseline stores four scalars per point");
            }
        }
        reports.push(format!("{label}: {total} scalars"));
    }
    println!(
        "criterion 9 (round trip + accounting): PASS — bit-exact reload; {}",
        reports.join("; ")
    );
}
