//! Command-line driver: build ground truth, train and evaluate filter
//! indexes, and emit metrics/plots. Every subcommand is reproducible from
//! its flags, the config file, and the dataset file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kdist::bench::{
    ablation_grid, append_metrics, evaluate, make_synthetic, read_metrics, scatter_svg, skyline,
    MetricsRow, PlotSeries, Provenance, SyntheticSpec,
};
use kdist::config::{config_hash, default_ks, RunConfig};
use kdist::cop::fit_cop;
use kdist::dataset::{load_dataset, write_dataset, Dataset, DatasetFormat, Metric};
use kdist::engine::{load_index, rknn_query, save_index, IndexArtifact};
use kdist::oracle::build_kdist_table;
use kdist::table::KDistTable;
use kdist::trainer::{random_search, train_reweighted};

#[derive(Parser)]
#[command(
    name = "kdist",
    about = "Learned k-distance bounds for exact reverse-k-nearest-neighbor queries",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    RoadNetworkNodes,
    EmbeddingText,
    Csv,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::RoadNetworkNodes => DatasetFormat::RoadNetworkNodes,
            FormatArg::EmbeddingText => DatasetFormat::EmbeddingText,
            FormatArg::Csv => DatasetFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Manhattan,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Manhattan => Metric::Manhattan,
        }
    }
}

/// Flags shared by the data-driven subcommands. A config file provides the
/// same information; explicit flags override it.
#[derive(Args)]
struct Common {
    /// JSON run configuration (sections: dataset, model, bounds, trainer,
    /// eval, search).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file (overrides the config's dataset.path).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset file format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Distance metric.
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Largest k the index covers (overrides the config).
    #[arg(long)]
    kmax: Option<usize>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse a cached ground-truth table built by `kdist kdist`.
    #[arg(long)]
    table: Option<PathBuf>,
}

impl Common {
    /// Effective run config: file (if given) with flag overrides applied.
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => {
                let path = self
                    .dataset
                    .clone()
                    .ok_or_else(|| anyhow!("either --config or --dataset is required"))?;
                let format = self
                    .format
                    .ok_or_else(|| anyhow!("--format is required without a config file"))?;
                let text = format!(
                    r#"{{"dataset": {{"path": {}, "format": {}}}}}"#,
                    serde_json::to_string(&path)?,
                    serde_json::to_string(&DatasetFormat::from(format))?
                );
                serde_json::from_str(&text)?
            }
        };
        if let Some(path) = &self.dataset {
            cfg.dataset.path = path.clone();
        }
        if let Some(format) = self.format {
            cfg.dataset.format = format.into();
        }
        if let Some(metric) = self.metric {
            cfg.dataset.metric = metric.into();
        }
        if let Some(kmax) = self.kmax {
            cfg.dataset.k_max = kmax;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_data(&self, cfg: &RunConfig) -> Result<Dataset> {
        load_dataset(&cfg.dataset.path, cfg.dataset.format, cfg.dataset.metric)
            .with_context(|| format!("loading dataset {}", cfg.dataset.path.display()))
    }

    /// Cached table when `--table` is given (validated against the dataset
    /// and k_max), freshly built otherwise.
    fn load_table(&self, ds: &Dataset, k_max: usize) -> Result<KDistTable> {
        match &self.table {
            Some(path) => {
                let table = KDistTable::load(path)
                    .with_context(|| format!("loading table {}", path.display()))?;
                if table.n() != ds.n() || table.k_max() != k_max {
                    bail!(
                        "cached table is {}x{}, need {}x{}",
                        table.n(),
                        table.k_max(),
                        ds.n(),
                        k_max
                    );
                }
                Ok(table)
            }
            None => Ok(build_kdist_table(ds, k_max)?),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the exact k-distance table and cache it.
    Kdist {
        #[command(flatten)]
        common: Common,
        /// Where to write the table cache.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model with iterative re-weighting and save the index.
    Train {
        #[command(flatten)]
        common: Common,
        /// Where to write the index artifact.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the log-log-line baseline index and save it.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Where to write the index artifact.
        #[arg(long)]
        out: PathBuf,
        /// Also restore monotonicity over the baseline's bound rows.
        #[arg(long)]
        monotone: bool,
    },
    /// Answer one reverse-k-nearest-neighbor query exactly.
    Query {
        #[command(flatten)]
        common: Common,
        /// Index artifact to query.
        #[arg(long)]
        index: PathBuf,
        /// Neighborhood size k.
        #[arg(long)]
        k: usize,
        /// Query coordinates, comma-separated (external query).
        #[arg(long, conflicts_with = "point_index", allow_hyphen_values = true)]
        point: Option<String>,
        /// Query by database point index (excluded from its own result).
        #[arg(long)]
        point_index: Option<usize>,
    },
    /// Evaluate an index's candidate-set sizes and append a metrics row.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Index artifact to evaluate.
        #[arg(long)]
        index: PathBuf,
        /// Metrics CSV to append to.
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        /// Row identifier.
        #[arg(long, default_value = "run")]
        run_id: String,
        /// Comma-separated k values (default: powers of two up to k_max).
        #[arg(long)]
        ks: Option<String>,
    },
    /// Run the 12-row ablation grid and append its metrics rows.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        #[arg(long, default_value = "ablation")]
        run_id: String,
    },
    /// Random hyperparameter search; appends one metrics row per trial.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        #[arg(long, default_value = "search")]
        run_id: String,
        /// Number of trials (overrides the config).
        #[arg(long)]
        trials: Option<usize>,
        /// Save the best trial's artifact (lowest mean CSS, size breaks ties).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pareto-optimal rows of a metrics file, optionally plotted.
    Skyline {
        /// Metrics CSV produced by eval/ablate/search.
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        /// Write the skyline rows to this CSV (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a log-log scatter of all rows, one series per dataset,
        /// baseline rows as their own series.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Generate a synthetic dataset (Gaussian blobs + uniform background).
    Synth {
        /// Total number of points for the built-in road-like mixture.
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// JSON file with a full mixture spec (overrides --n).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate `{t}`"))
        })
        .collect()
}

fn parse_ks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("bad k `{t}`"))
        })
        .collect()
}

fn dataset_label(cfg: &RunConfig) -> String {
    cfg.dataset.path.display().to_string()
}

fn save_artifact(artifact: &IndexArtifact, path: &Path) -> Result<()> {
    save_index(artifact, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Kdist { common, out } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let table = common.load_table(&ds, cfg.dataset.k_max)?;
            table.save(&out)?;
            println!(
                "table: {} points x k_max {} -> {}",
                table.n(),
                table.k_max(),
                out.display()
            );
        }
        Command::Train { common, out } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let table = common.load_table(&ds, cfg.dataset.k_max)?;
            let train_cfg = cfg.train_config();
            let outcome = train_reweighted(&ds, &table, &train_cfg)?;
            save_artifact(&outcome.artifact, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "model": outcome.artifact.model.kind(),
                    "config_hash": config_hash(&train_cfg),
                    "param_count": outcome.artifact.param_count(),
                    "css_trace": outcome.css_trace,
                    "index": out.display().to_string(),
                })
            );
        }
        Command::Baseline {
            common,
            out,
            monotone,
        } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let table = common.load_table(&ds, cfg.dataset.k_max)?;
            let mut model = fit_cop(&table)?;
            model.restore_monotone = monotone;
            let artifact = IndexArtifact::cop(model, ds.fingerprint());
            save_artifact(&artifact, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "model": "cop",
                    "param_count": artifact.param_count(),
                    "index": out.display().to_string(),
                })
            );
        }
        Command::Query {
            common,
            index,
            k,
            point,
            point_index,
        } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let artifact = load_index(&index)?;
            let (q, q_index) = match (&point, point_index) {
                (Some(text), None) => (parse_point(text)?, None),
                (None, Some(i)) => {
                    if i >= ds.n() {
                        bail!("point index {i} out of range (n = {})", ds.n());
                    }
                    (ds.point(i).to_vec(), Some(i))
                }
                _ => bail!("exactly one of --point or --point-index is required"),
            };
            let result = rknn_query(&artifact, &ds, &q, k, q_index)?;
            println!(
                "{}",
                serde_json::json!({
                    "k": k,
                    "result": result.indices,
                    "included": result.stats.included,
                    "candidates": result.stats.candidates,
                    "rejected": result.stats.rejected,
                    "refined_in": result.stats.refined_in,
                    "refined_out": result.stats.refined_out,
                    "wall_ms": result.stats.wall_ms,
                })
            );
        }
        Command::Eval {
            common,
            index,
            metrics,
            run_id,
            ks,
        } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let artifact = load_index(&index)?;
            let ks = match ks {
                Some(text) => parse_ks(&text)?,
                None if cfg.eval.ks.is_some() => cfg.eval_ks(),
                None => default_ks(artifact.k_max),
            };
            let provenance = Provenance::from_artifact(&run_id, &dataset_label(&cfg), &artifact);
            let report = evaluate(&artifact, &ds, &ks, &cfg.eval.query_set, provenance)?;
            append_metrics(&metrics, &[report.to_row()])?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Ablate {
            common,
            metrics,
            run_id,
        } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let table = common.load_table(&ds, cfg.dataset.k_max)?;
            let reports = ablation_grid(
                &ds,
                &table,
                &cfg.train_config(),
                &cfg.eval_ks(),
                &cfg.eval.query_set,
                &run_id,
                &dataset_label(&cfg),
            )?;
            let rows: Vec<MetricsRow> = reports.iter().map(|r| r.to_row()).collect();
            append_metrics(&metrics, &rows)?;
            println!("weights aggregate monotone param_count mean_css max_css");
            for row in &rows {
                println!(
                    "{:<8} {:<9} {:<8} {:>11} {:>9.3} {:>7}",
                    row.sample_weights,
                    row.agg_mode,
                    row.monotone,
                    row.param_count,
                    row.mean_css,
                    row.max_css
                );
            }
        }
        Command::Search {
            common,
            metrics,
            run_id,
            trials,
            out,
        } => {
            let cfg = common.run_config()?;
            let ds = common.load_data(&cfg)?;
            let table = common.load_table(&ds, cfg.dataset.k_max)?;
            let trials = trials.unwrap_or(cfg.search.trials);
            let results = random_search(&ds, &table, &cfg.search.space, trials, cfg.seed)?;
            let label = dataset_label(&cfg);
            let mut rows = Vec::new();
            let mut best: Option<&kdist::trainer::SearchTrial> = None;
            for trial in &results {
                match &trial.outcome {
                    Ok(o) => {
                        let p = Provenance::from_train(
                            &format!("{run_id}-{}", trial.trial),
                            &label,
                            &trial.config,
                        );
                        rows.push(MetricsRow {
                            param_count: o.param_count,
                            mean_css: o.mean_css,
                            max_css: o.max_css,
                            wall_ms: o.wall_ms,
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
                        });
                        let better = match best.and_then(|b| b.outcome.as_ref().ok()) {
                            None => true,
                            Some(cur) => {
                                (o.mean_css, o.param_count) < (cur.mean_css, cur.param_count)
                            }
                        };
                        if better {
                            best = Some(trial);
                        }
                    }
                    Err(e) => eprintln!("trial {} failed: {e}", trial.trial),
                }
            }
            append_metrics(&metrics, &rows)?;
            let failed = results.len() - rows.len();
            println!(
                "search: {} trials, {} succeeded, {} failed -> {}",
                results.len(),
                rows.len(),
                failed,
                metrics.display()
            );
            if let Some(path) = out {
                let best = best.ok_or_else(|| anyhow!("every trial failed"))?;
                let outcome = best.outcome.as_ref().expect("best trial succeeded");
                save_artifact(&outcome.artifact, &path)?;
                println!(
                    "best: trial {} ({}) mean_css {:.3} params {} -> {}",
                    best.trial,
                    best.config.model.kind(),
                    outcome.mean_css,
                    outcome.param_count,
                    path.display()
                );
            }
        }
        Command::Skyline { metrics, out, svg } => {
            let rows = read_metrics(&metrics)?;
            if rows.is_empty() {
                bail!("{} has no rows", metrics.display());
            }
            let sky = skyline(&rows);
            match &out {
                Some(path) => {
                    append_metrics(path, &sky)?;
                    println!(
                        "skyline: {} of {} rows -> {}",
                        sky.len(),
                        rows.len(),
                        path.display()
                    );
                }
                None => {
                    println!("param_count mean_css model run_id");
                    for row in &sky {
                        println!(
                            "{:>11} {:>9.3} {:<13} {}",
                            row.param_count, row.mean_css, row.model_type, row.run_id
                        );
                    }
                }
            }
            if let Some(path) = svg {
                let mut series: Vec<PlotSeries> = Vec::new();
                for row in &rows {
                    let label = if row.model_type == "cop" {
                        format!("{} (baseline)", row.dataset)
                    } else {
                        row.dataset.clone()
                    };
                    let point = (row.param_count as f64, row.mean_css);
                    match series.iter_mut().find(|s| s.label == label) {
                        Some(s) => s.points.push(point),
                        None => series.push(PlotSeries {
                            label,
                            points: vec![point],
                        }),
                    }
                }
                fs::write(
                    &path,
                    scatter_svg(&series, "candidate set size vs index size"),
                )?;
                println!("plot -> {}", path.display());
            }
        }
        Command::Synth {
            n,
            spec,
            seed,
            out,
            format,
        } => {
            let spec = match spec {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<SyntheticSpec>(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                }
                None => SyntheticSpec::road_like(n),
            };
            let ds = make_synthetic(&spec, seed)?;
            write_dataset(&ds, &out, format.into())?;
            println!(
                "synthetic: {} points, dim {}, seed {} -> {}",
                ds.n(),
                ds.dim(),
                seed,
                out.display()
            );
        }
    }
    Ok(())
}
