//! Iterative sample re-weighting and seeded random hyperparameter search.
//!
//! A k-distance regressor is only as good as the candidate sets its bounds
//! admit, and plain regression spends its capacity where the *loss* is
//! large, not where the *filter* is weak. The re-weighting loop closes that
//! gap: after each fit, the filter runs for every database point and every
//! `k`, and the observed candidate-set sizes become the next round's sample
//! weights, so the model is pulled toward exactly the cells that currently
//! let candidates through.
//!
//! [`random_search`] layers a reproducible, uniformly-sampled hyperparameter
//! search on top; each trial trains via [`train_reweighted`] with a seed
//! derived from the trial index, so trials can run in parallel without
//! changing any result.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundFlags, BoundMode};
use crate::dataset::Dataset;
use crate::engine::{build_learned_artifact, IndexArtifact, PreparedIndex};
use crate::error::{Error, Result};
use crate::normalize::{kdist_norm_apply_table, kdist_norm_fit, zscore_apply_all, zscore_fit};
use crate::regress::mlp::{Loss, MlpConfig};
use crate::regress::tree::TreeConfig;
use crate::regress::{fit_model, ModelConfig};
use crate::table::KDistTable;
use crate::Real;

/// Where the sample weights of iterations ≥ 2 come from; iteration 1 is
/// always uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// All-ones every round; disables re-weighting while keeping the
    /// fit/evaluate cadence (and the CSS trace) intact.
    Uniform,
    /// Candidate-set size of the previous round's filter, per point and k.
    Css,
    /// Density proxy `1 / (1e-9 + kdist(p, k))`: dense points weigh more.
    /// Fixed by the ground truth, so it does not change across rounds.
    KdistInverse,
}

impl WeightSource {
    pub fn tag(self) -> &'static str {
        match self {
            WeightSource::Uniform => "uniform",
            WeightSource::Css => "css",
            WeightSource::KdistInverse => "kdist_inverse",
        }
    }
}

/// Settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub mode: BoundMode,
    pub flags: BoundFlags,
    /// Fit/evaluate rounds; the first fit always uses uniform weights.
    pub iterations: usize,
    pub k_max: usize,
    pub seed: u64,
    pub weight_source: WeightSource,
    /// Floor weights at 1 so a cell the filter already solves (CSS 0) keeps
    /// contributing to the objective instead of dropping out.
    pub floor: bool,
    /// Rescale floored weights to mean 1, keeping effective learning rates
    /// comparable across rounds.
    pub rescale: bool,
}

impl TrainConfig {
    pub fn new(model: ModelConfig, k_max: usize) -> Self {
        TrainConfig {
            model,
            mode: BoundMode::Combined,
            flags: BoundFlags::default(),
            iterations: 4,
            k_max,
            seed: 0,
            weight_source: WeightSource::Css,
            floor: true,
            rescale: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// A finished training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Final-round model with its calibrated bounds, ready to serve queries.
    pub artifact: IndexArtifact,
    /// Mean candidate-set size over all `(point, k)` cells after each
    /// round's fit — exactly `iterations` entries, reported as observed
    /// (improvement is not guaranteed to be monotone).
    pub css_trace: Vec<f64>,
    /// Per-cell candidate-set sizes of the final round, `(n, k_max)`.
    pub final_css: Array2<u64>,
}

/// Weights for the next round. `css` is the matrix the previous round's
/// filter produced; flooring and rescaling follow the config.
fn next_weights(cfg: &TrainConfig, css: &Array2<u64>, table: &KDistTable) -> Result<Array2<Real>> {
    let (n, k_max) = css.dim();
    let mut w = match cfg.weight_source {
        WeightSource::Uniform => Array2::from_elem((n, k_max), 1.0),
        WeightSource::Css => css.map(|&c| c as Real),
        WeightSource::KdistInverse => {
            let mut w = Array2::zeros((n, k_max));
            for i in 0..n {
                for k in 1..=k_max {
                    w[(i, k - 1)] = 1.0 / (1e-9 + table.get(i, k)?);
                }
            }
            w
        }
    };
    if cfg.floor {
        w.mapv_inplace(|v| v.max(1.0));
    }
    if cfg.rescale {
        let total = w.sum();
        if total > 0.0 {
            let scale = (n * k_max) as Real / total;
            w.mapv_inplace(|v| v * scale);
        }
    }
    Ok(w)
}

/// Trains a model with iterative sample re-weighting.
///
/// Round 1 fits with uniform weights. After every round the filter runs for
/// all database points and all `k ≤ k_max`, the mean candidate-set size is
/// appended to the trace, and — unless this was the last round — the weights
/// for the next refit-from-scratch are drawn from `cfg.weight_source` (for
/// [`WeightSource::Css`], `w[i,k] = max(CSS(x_i, k), 1)` before rescaling).
/// Weights therefore depend only on the previous round's artifact.
///
/// Fully deterministic: the same dataset, table, and config reproduce the
/// artifact bit for bit. Round `i` fits with seed `cfg.seed + i`.
pub fn train_reweighted(
    ds: &Dataset,
    table: &KDistTable,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if table.n() != ds.n() {
        return Err(Error::ShapeMismatch(format!(
            "table covers {} points, dataset has {}",
            table.n(),
            ds.n()
        )));
    }
    if table.k_max() != cfg.k_max {
        return Err(Error::InvalidConfig(format!(
            "config wants k_max {} but the table was built with {}",
            cfg.k_max,
            table.k_max()
        )));
    }
    let n = ds.n();
    let zscore = zscore_fit(ds.points());
    let norm = kdist_norm_fit(table);
    let inputs = zscore_apply_all(&zscore, ds)?;
    let targets = kdist_norm_apply_table(&norm, table)?;

    let mut weights = Array2::from_elem((n, cfg.k_max), 1.0);
    let mut css_trace = Vec::with_capacity(cfg.iterations);
    let mut last: Option<(IndexArtifact, Array2<u64>)> = None;
    for round in 0..cfg.iterations {
        let model = fit_model(
            &cfg.model,
            &inputs.view(),
            &targets.view(),
            &weights.view(),
            cfg.seed.wrapping_add(round as u64),
        )?;
        let artifact = build_learned_artifact(
            ds,
            table,
            zscore.clone(),
            norm.clone(),
            model,
            cfg.mode,
            cfg.flags,
        )?;
        let css = PreparedIndex::prepare(&artifact, ds)?.css_matrix();
        css_trace.push(css.iter().map(|&c| c as f64).sum::<f64>() / css.len() as f64);
        if round + 1 < cfg.iterations {
            weights = next_weights(cfg, &css, table)?;
        }
        last = Some((artifact, css));
    }
    let (artifact, final_css) = last.expect("at least one round");
    Ok(TrainOutcome {
        artifact,
        css_trace,
        final_css,
    })
}

/// Model families [`random_search`] may draw from. The boosting families are
/// accepted for config compatibility; sampling them yields trials that
/// record an `UnsupportedModel` failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DecisionTree,
    Mlp,
    GradientBoosting,
    AdaBoost,
}

/// Hyperparameter ranges sampled uniformly by [`random_search`]; all bounds
/// inclusive. Defaults cover trees at depth 1–15 and networks with 1–5
/// layers of 4–300 units, batch sizes 2⁶–2¹², dropout in [0, 1], and both
/// absolute and squared losses. The learning rate is sampled log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub families: Vec<Family>,
    pub max_depth: (usize, usize),
    pub n_layers: (usize, usize),
    pub units: (usize, usize),
    /// Batch size exponent: sizes are `2^lo ..= 2^hi`.
    pub batch_log2: (u32, u32),
    pub dropout: (f64, f64),
    pub losses: Vec<Loss>,
    pub lr: (f64, f64),
    /// Per-trial training epochs — a search budget, deliberately smaller
    /// than a dedicated training run's default.
    pub epochs: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            families: vec![Family::DecisionTree, Family::Mlp],
            max_depth: (1, 15),
            n_layers: (1, 5),
            units: (4, 300),
            batch_log2: (6, 12),
            dropout: (0.0, 1.0),
            losses: vec![Loss::Mae, Loss::Mse],
            lr: (1e-3, 3e-1),
            epochs: 40,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.max_depth.0 >= 1
            && self.max_depth.0 <= self.max_depth.1
            && self.n_layers.0 >= 1
            && self.n_layers.0 <= self.n_layers.1
            && self.units.0 >= 1
            && self.units.0 <= self.units.1
            && self.batch_log2.0 <= self.batch_log2.1
            && self.batch_log2.1 < usize::BITS
            && self.dropout.0 <= self.dropout.1
            && self.dropout.0 >= 0.0
            && self.lr.0 <= self.lr.1
            && self.lr.0 > 0.0
            && self.epochs >= 1;
        if !ordered {
            return Err(Error::InvalidConfig(
                "search space has an empty or invalid range".into(),
            ));
        }
        if self.families.is_empty() || self.losses.is_empty() {
            return Err(Error::InvalidConfig(
                "search space needs at least one family and loss".into(),
            ));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ModelConfig {
        match self.families[rng.gen_range(0..self.families.len())] {
            Family::DecisionTree => ModelConfig::DecisionTree(TreeConfig {
                max_depth: Some(rng.gen_range(self.max_depth.0..=self.max_depth.1)),
                min_samples_split: 2,
            }),
            Family::Mlp => {
                let layers = rng.gen_range(self.n_layers.0..=self.n_layers.1);
                ModelConfig::Mlp(MlpConfig {
                    hidden: (0..layers)
                        .map(|_| rng.gen_range(self.units.0..=self.units.1))
                        .collect(),
                    batch_size: 1 << rng.gen_range(self.batch_log2.0..=self.batch_log2.1),
                    lr: rng.gen_range(self.lr.0.ln()..=self.lr.1.ln()).exp(),
                    epochs: self.epochs,
                    dropout: rng.gen_range(self.dropout.0..=self.dropout.1),
                    loss: self.losses[rng.gen_range(0..self.losses.len())],
                })
            }
            Family::GradientBoosting => ModelConfig::GradientBoosting,
            Family::AdaBoost => ModelConfig::AdaBoost,
        }
    }
}

/// Size and candidate-set metrics of one successful trial.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub artifact: IndexArtifact,
    pub css_trace: Vec<f64>,
    /// Mean CSS of the final round over all `(point, k)` cells.
    pub mean_css: f64,
    /// Largest single-cell CSS of the final round.
    pub max_css: u64,
    pub param_count: usize,
    pub wall_ms: f64,
}

/// Equality is result identity — wall time is provenance, not part of the
/// outcome, so reruns of a seeded search compare equal.
impl PartialEq for SearchOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.artifact == other.artifact
            && self.css_trace == other.css_trace
            && self.mean_css == other.mean_css
            && self.max_css == other.max_css
            && self.param_count == other.param_count
    }
}

/// One search trial: the config that was drawn and what became of it.
/// Failures (for example a sampled unsupported family) are recorded, never
/// propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrial {
    pub trial: usize,
    pub config: TrainConfig,
    pub outcome: std::result::Result<SearchOutcome, String>,
}

/// Distinct per-trial RNG streams from one user seed.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0x2545_F491_4F6C_DD1D)
}

/// Uniform random hyperparameter search.
///
/// Each trial draws a config from `space`, trains it with
/// [`train_reweighted`] (defaults otherwise: Combined aggregation, both
/// enhancements, 4 rounds, CSS weights), and records mean/max candidate-set
/// size and parameter count. Trials run in parallel; results are ordered by
/// trial index and fully reproducible from `seed`.
pub fn random_search(
    ds: &Dataset,
    table: &KDistTable,
    space: &SearchSpace,
    trials: usize,
    seed: u64,
) -> Result<Vec<SearchTrial>> {
    space.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
            let mut config = TrainConfig::new(space.sample(&mut rng), table.k_max());
            config.seed = rng.gen();
            let start = std::time::Instant::now();
            let outcome = match train_reweighted(ds, table, &config) {
                Ok(out) => Ok(SearchOutcome {
                    mean_css: *out.css_trace.last().expect("at least one round"),
                    max_css: out.final_css.iter().copied().max().unwrap_or(0),
                    param_count: out.artifact.param_count(),
                    artifact: out.artifact,
                    css_trace: out.css_trace,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                }),
                Err(e) => Err(e.to_string()),
            };
            SearchTrial {
                trial,
                config,
                outcome,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Metric;
    use crate::oracle::build_kdist_table;

    fn random_dataset(n: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<Real>() * 4.0).collect())
            .collect();
        Dataset::from_rows(rows, Metric::Euclidean).unwrap()
    }

    fn tree_cfg(depth: Option<usize>) -> ModelConfig {
        ModelConfig::DecisionTree(TreeConfig {
            max_depth: depth,
            min_samples_split: 2,
        })
    }

    /// Integer grid on a line: every distance, per-k extreme, and min-max
    /// round trip is exact in floating point, so a memorizing model yields
    /// truly zero-width evaluated bounds (margin 0) and CSS ≡ 0.
    fn line_dataset(n: usize) -> Dataset {
        let rows = (0..n).map(|i| vec![i as Real]).collect();
        Dataset::from_rows(rows, Metric::Euclidean).unwrap()
    }

    #[test]
    fn one_iteration_equals_plain_uniform_fit() {
        let ds = random_dataset(60, 2, 11);
        let k_max = 4;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let mut cfg = TrainConfig::new(tree_cfg(Some(4)), k_max);
        cfg.iterations = 1;
        let out = train_reweighted(&ds, &table, &cfg).unwrap();

        // The same artifact, assembled by hand with uniform weights.
        let zscore = zscore_fit(ds.points());
        let norm = kdist_norm_fit(&table);
        let inputs = zscore_apply_all(&zscore, &ds).unwrap();
        let targets = kdist_norm_apply_table(&norm, &table).unwrap();
        let weights = Array2::from_elem((ds.n(), k_max), 1.0);
        let model = fit_model(
            &cfg.model,
            &inputs.view(),
            &targets.view(),
            &weights.view(),
            0,
        )
        .unwrap();
        let expected =
            build_learned_artifact(&ds, &table, zscore, norm, model, cfg.mode, cfg.flags).unwrap();
        assert_eq!(out.artifact, expected);
        assert_eq!(out.css_trace.len(), 1);
    }

    #[test]
    fn perfect_memorizer_is_a_fixed_point() {
        // A depth-unbounded tree memorizes the table; CSS is identically 0,
        // weights floor back to 1, and every later round refits the same
        // model.
        let ds = line_dataset(50);
        let k_max = 3;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let mut cfg = TrainConfig::new(tree_cfg(None), k_max);

        cfg.iterations = 1;
        let first = train_reweighted(&ds, &table, &cfg).unwrap();
        cfg.iterations = 2;
        let second = train_reweighted(&ds, &table, &cfg).unwrap();

        assert_eq!(first.css_trace, vec![0.0]);
        assert_eq!(second.css_trace, vec![0.0, 0.0]);
        assert_eq!(second.artifact, first.artifact);
        assert!(second.final_css.iter().all(|&c| c == 0));
    }

    #[test]
    fn default_config_runs_four_rounds() {
        let ds = random_dataset(40, 2, 17);
        let k_max = 3;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let cfg = TrainConfig::new(tree_cfg(Some(2)), k_max);
        assert_eq!(cfg.iterations, 4);
        let out = train_reweighted(&ds, &table, &cfg).unwrap();
        assert_eq!(out.css_trace.len(), 4);
    }

    #[test]
    fn same_seed_reproduces_the_artifact_bit_for_bit() {
        let ds = random_dataset(45, 2, 19);
        let k_max = 3;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let mut cfg = TrainConfig::new(
            ModelConfig::Mlp(MlpConfig {
                hidden: vec![8],
                epochs: 15,
                batch_size: 16,
                ..Default::default()
            }),
            k_max,
        );
        cfg.iterations = 2;
        cfg.seed = 99;
        let a = train_reweighted(&ds, &table, &cfg).unwrap();
        let b = train_reweighted(&ds, &table, &cfg).unwrap();
        assert_eq!(a.artifact, b.artifact);
        assert_eq!(a.css_trace, b.css_trace);
    }

    #[test]
    fn weights_are_floored_then_rescaled_to_mean_one() {
        let ds = random_dataset(10, 2, 7);
        let k_max = 2;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let mut cfg = TrainConfig::new(tree_cfg(Some(2)), k_max);
        let mut css = Array2::zeros((10, 2));
        css[(3, 0)] = 9; // one hot cell, everything else floors to 1

        cfg.rescale = false;
        let floored = next_weights(&cfg, &css, &table).unwrap();
        assert!(floored.iter().all(|&w| w >= 1.0 && w.is_finite()));
        assert_eq!(floored[(3, 0)], 9.0);
        assert_eq!(floored[(0, 0)], 1.0);

        cfg.rescale = true;
        let rescaled = next_weights(&cfg, &css, &table).unwrap();
        let mean = rescaled.sum() / rescaled.len() as Real;
        assert!((mean - 1.0).abs() < 1e-12);
        // Rescaling preserves the relative emphasis.
        assert!((rescaled[(3, 0)] / rescaled[(0, 0)] - 9.0).abs() < 1e-12);

        cfg.weight_source = WeightSource::KdistInverse;
        let density = next_weights(&cfg, &css, &table).unwrap();
        assert!(density.iter().all(|&w| w > 0.0 && w.is_finite()));

        cfg.weight_source = WeightSource::Uniform;
        cfg.rescale = false;
        let uniform = next_weights(&cfg, &css, &table).unwrap();
        assert!(uniform.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn unfloored_zero_css_weights_fail_the_refit() {
        // With flooring disabled, a perfect first round zeroes every weight
        // and the second round's fit must reject them.
        let ds = line_dataset(30);
        let k_max = 2;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let mut cfg = TrainConfig::new(tree_cfg(None), k_max);
        cfg.iterations = 2;
        cfg.floor = false;
        assert!(matches!(
            train_reweighted(&ds, &table, &cfg),
            Err(Error::DegenerateWeights)
        ));
    }

    #[test]
    fn config_validation_rejects_zero_iterations() {
        let mut cfg = TrainConfig::new(tree_cfg(Some(2)), 2);
        cfg.iterations = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        // And a table built with a different k_max is refused.
        let ds = random_dataset(20, 2, 3);
        let table = build_kdist_table(&ds, 3).unwrap();
        let cfg = TrainConfig::new(tree_cfg(Some(2)), 2);
        assert!(matches!(
            train_reweighted(&ds, &table, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn search_is_deterministic_and_stays_in_range() {
        let ds = random_dataset(40, 2, 29);
        let k_max = 3;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let space = SearchSpace {
            families: vec![Family::DecisionTree],
            epochs: 5,
            ..Default::default()
        };
        let a = random_search(&ds, &table, &space, 12, 7).unwrap();
        let b = random_search(&ds, &table, &space, 12, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        for trial in &a {
            match &trial.config.model {
                ModelConfig::DecisionTree(c) => {
                    let d = c.max_depth.unwrap();
                    assert!((1..=15).contains(&d), "max_depth {d} out of range");
                }
                other => panic!("tree-only space sampled {other:?}"),
            }
            let out = trial.outcome.as_ref().expect("tree trials succeed");
            assert_eq!(out.css_trace.len(), 4);
            assert!(out.mean_css >= 0.0);
            assert!(out.param_count > 0);
        }
    }

    #[test]
    fn single_trial_is_deterministic_and_mlp_ranges_hold() {
        let ds = random_dataset(30, 2, 31);
        let k_max = 2;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let space = SearchSpace {
            families: vec![Family::Mlp],
            epochs: 2,
            ..Default::default()
        };
        let a = random_search(&ds, &table, &space, 6, 3).unwrap();
        let b = random_search(&ds, &table, &space, 6, 3).unwrap();
        assert_eq!(a, b);
        for trial in &a {
            match &trial.config.model {
                ModelConfig::Mlp(c) => {
                    assert!((1..=5).contains(&c.hidden.len()));
                    assert!(c.hidden.iter().all(|&u| (4..=300).contains(&u)));
                    assert!(c.batch_size.is_power_of_two());
                    assert!((64..=4096).contains(&c.batch_size));
                    assert!((0.0..=1.0).contains(&c.dropout));
                    assert!((1e-3..=3e-1).contains(&c.lr));
                    assert_eq!(c.epochs, 2);
                }
                other => panic!("mlp-only space sampled {other:?}"),
            }
            assert!(trial.outcome.is_ok());
        }
    }

    #[test]
    fn unsupported_family_failures_are_recorded_not_fatal() {
        let ds = random_dataset(20, 2, 37);
        let k_max = 2;
        let table = build_kdist_table(&ds, k_max).unwrap();
        let space = SearchSpace {
            families: vec![Family::GradientBoosting, Family::AdaBoost],
            ..Default::default()
        };
        let trials = random_search(&ds, &table, &space, 4, 1).unwrap();
        assert_eq!(trials.len(), 4);
        for trial in trials {
            let err = trial.outcome.unwrap_err();
            assert!(err.contains("reserved"), "unexpected error: {err}");
        }
    }

    #[test]
    fn search_space_validation_catches_empty_ranges() {
        let space = SearchSpace {
            max_depth: (5, 3),
            ..SearchSpace::default()
        };
        assert!(space.validate().is_err());
        let space = SearchSpace {
            families: vec![],
            ..SearchSpace::default()
        };
        assert!(space.validate().is_err());
        let space = SearchSpace {
            lr: (0.0, 0.1),
            ..SearchSpace::default()
        };
        assert!(space.validate().is_err());
        assert!(SearchSpace::default().validate().is_ok());
    }
}
