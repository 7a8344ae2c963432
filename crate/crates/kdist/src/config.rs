//! Run configuration: one JSON document pins everything a run needs, so any
//! metrics row can be reproduced from (config file, seed, dataset file).
//!
//! Every section except `dataset` has full defaults; a minimal config is
//! just `{"dataset": {"path": "...", "format": "csv"}}`. The CLI exposes the
//! common fields (`--kmax`, `--seed`, ...) as overrides on top.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::QuerySet;
use crate::bounds::{BoundFlags, BoundMode};
use crate::dataset::{DatasetFormat, Metric};
use crate::error::{Error, Result};
use crate::regress::tree::TreeConfig;
use crate::regress::ModelConfig;
use crate::trainer::{SearchSpace, TrainConfig, WeightSource};

/// Where the points come from and how many neighbors the index covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSection {
    pub path: PathBuf,
    pub format: DatasetFormat,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    /// Largest k the index answers; ground truth is built to this depth.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_metric() -> Metric {
    Metric::Euclidean
}

fn default_k_max() -> usize {
    16
}

/// Residual aggregation and bound enhancements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsSection {
    pub aggregate: BoundMode,
    pub clip: bool,
    pub monotone: bool,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            aggregate: BoundMode::Combined,
            clip: true,
            monotone: true,
        }
    }
}

impl BoundsSection {
    pub fn flags(&self) -> BoundFlags {
        BoundFlags {
            clip_nonneg: self.clip,
            restore_monotone: self.monotone,
        }
    }
}

/// Re-weighting loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerSection {
    pub iterations: usize,
    pub weight_source: WeightSource,
    pub floor: bool,
    pub rescale: bool,
}

impl Default for TrainerSection {
    fn default() -> Self {
        TrainerSection {
            iterations: 4,
            weight_source: WeightSource::Css,
            floor: true,
            rescale: true,
        }
    }
}

/// Evaluation settings: which k values and which query points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct EvalSection {
    /// `None` means powers of two up to and including `k_max`.
    pub ks: Option<Vec<usize>>,
    pub query_set: QuerySet,
}

/// Random-search budget and ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSection {
    pub trials: usize,
    #[serde(flatten)]
    pub space: SearchSpace,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            trials: 50,
            space: SearchSpace::default(),
        }
    }
}

fn default_model() -> ModelConfig {
    ModelConfig::DecisionTree(TreeConfig::default())
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub trainer: TrainerSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.k_max == 0 {
            return Err(Error::InvalidConfig(
                "dataset.k_max must be at least 1".into(),
            ));
        }
        if self.trainer.iterations == 0 {
            return Err(Error::InvalidConfig(
                "trainer.iterations must be at least 1".into(),
            ));
        }
        if let Some(ks) = &self.eval.ks {
            if ks.is_empty() {
                return Err(Error::InvalidConfig("eval.ks must not be empty".into()));
            }
            if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > self.dataset.k_max) {
                return Err(Error::InvalidConfig(format!(
                    "eval.ks entry {bad} outside 1..={}",
                    self.dataset.k_max
                )));
            }
        }
        if self.search.trials == 0 {
            return Err(Error::InvalidConfig(
                "search.trials must be at least 1".into(),
            ));
        }
        self.search.space.validate()
    }

    /// The training settings this config describes.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            model: self.model.clone(),
            mode: self.bounds.aggregate,
            flags: self.bounds.flags(),
            iterations: self.trainer.iterations,
            k_max: self.dataset.k_max,
            seed: self.seed,
            weight_source: self.trainer.weight_source,
            floor: self.trainer.floor,
            rescale: self.trainer.rescale,
        }
    }

    /// The k values evaluation runs at: explicit list, or powers of two up
    /// to and including `k_max`.
    pub fn eval_ks(&self) -> Vec<usize> {
        match &self.eval.ks {
            Some(ks) => ks.clone(),
            None => default_ks(self.dataset.k_max),
        }
    }
}

/// Powers of two `1, 2, 4, …` capped at `k_max`, with `k_max` itself always
/// included.
pub fn default_ks(k_max: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut k = 1;
    while k <= k_max {
        ks.push(k);
        k *= 2;
    }
    if *ks.last().expect("k_max >= 1") != k_max {
        ks.push(k_max);
    }
    ks
}

/// Short stable content hash of any serializable value, used to key metrics
/// rows back to the exact configuration that produced them.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize infallibly");
    let digest = Sha256::digest(&json);
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
