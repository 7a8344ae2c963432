//! Regression models that map a normalized point to its k-distance profile.
//!
//! Every model consumes a z-scored coordinate row and emits one value per
//! neighborhood size `k = 1..=k_max` in the min-max-normalized k-distance
//! space. Training is weighted per sample-output cell so the trainer can
//! emphasize points whose bounds currently admit many candidates.

pub mod mlp;
pub mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Common interface of fitted k-distance regressors.
pub trait KDistModel {
    fn input_dim(&self) -> usize;

    /// Number of outputs; output `k0` approximates the k-distance for
    /// `k = k0 + 1`.
    fn k_max(&self) -> usize;

    /// Predicts the full profile for one input row into `out`
    /// (`out.len() == k_max`).
    fn predict_into(&self, x: &[Real], out: &mut [Real]) -> Result<()>;

    /// Number of scalar parameters the fitted model stores; the unit of the
    /// index-size accounting.
    fn param_count(&self) -> usize;

    fn predict_row(&self, x: &[Real]) -> Result<Vec<Real>> {
        let mut out = vec![0.0; self.k_max()];
        self.predict_into(x, &mut out)?;
        Ok(out)
    }

    /// Predicts every row; row-by-row under the hood, so the result is
    /// bit-identical to separate [`KDistModel::predict_row`] calls.
    fn predict_batch(&self, xs: &ArrayView2<Real>) -> Result<Array2<Real>> {
        let (n, _) = xs.dim();
        let mut out = Array2::zeros((n, self.k_max()));
        for (i, row) in xs.outer_iter().enumerate() {
            let x = row
                .as_slice()
                .ok_or_else(|| Error::ShapeMismatch("input rows must be contiguous".into()))?;
            let mut dst = out.row_mut(i);
            self.predict_into(x, dst.as_slice_mut().expect("owned rows are contiguous"))?;
        }
        Ok(out)
    }
}

/// Shared shape/NaN/weight validation for `fit` entry points.
pub(crate) fn validate_fit_inputs(
    inputs: &ArrayView2<Real>,
    targets: &ArrayView2<Real>,
    weights: &ArrayView2<Real>,
) -> Result<()> {
    let n = inputs.nrows();
    if n == 0 || inputs.ncols() == 0 {
        return Err(Error::ShapeMismatch("inputs must be non-empty".into()));
    }
    if targets.ncols() == 0 {
        return Err(Error::ShapeMismatch(
            "targets must have at least one output".into(),
        ));
    }
    if targets.nrows() != n || weights.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "row mismatch: {} inputs, {} targets, {} weights",
            n,
            targets.nrows(),
            weights.nrows()
        )));
    }
    if weights.ncols() != targets.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "column mismatch: {} targets, {} weights",
            targets.ncols(),
            weights.ncols()
        )));
    }
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("inputs"));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("targets"));
    }
    if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFiniteInput("weights"));
    }
    // Each output needs positive total weight, otherwise its fit is undefined.
    for col in weights.columns() {
        if col.sum() <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
    }
    Ok(())
}

/// Model selection plus hyperparameters, as written in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    DecisionTree(tree::TreeConfig),
    Mlp(mlp::MlpConfig),
    /// Recognized in configs for forward compatibility; fitting reports
    /// [`Error::UnsupportedModel`].
    GradientBoosting,
    AdaBoost,
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::DecisionTree(_) => "decision_tree",
            ModelConfig::Mlp(_) => "mlp",
            ModelConfig::GradientBoosting => "gradient_boosting",
            ModelConfig::AdaBoost => "ada_boost",
        }
    }
}

/// A fitted model of any supported family. Tree parameters are kept at 64
/// bits; network weights at 32 bits, matching their serialized widths.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Tree(tree::TreeModel<f64>),
    Mlp(mlp::Mlp<f32>),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Tree(_) => "decision_tree",
            TrainedModel::Mlp(_) => "mlp",
        }
    }

    fn inner(&self) -> &dyn KDistModel {
        match self {
            TrainedModel::Tree(m) => m,
            TrainedModel::Mlp(m) => m,
        }
    }
}

impl KDistModel for TrainedModel {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn k_max(&self) -> usize {
        self.inner().k_max()
    }

    fn predict_into(&self, x: &[Real], out: &mut [Real]) -> Result<()> {
        self.inner().predict_into(x, out)
    }

    fn param_count(&self) -> usize {
        self.inner().param_count()
    }
}

/// Fits the configured model family on the given normalized training data.
pub fn fit_model(
    config: &ModelConfig,
    inputs: &ArrayView2<Real>,
    targets: &ArrayView2<Real>,
    weights: &ArrayView2<Real>,
    seed: u64,
) -> Result<TrainedModel> {
    match config {
        ModelConfig::DecisionTree(cfg) => Ok(TrainedModel::Tree(tree::TreeModel::fit(
            inputs, targets, weights, cfg,
        )?)),
        ModelConfig::Mlp(cfg) => Ok(TrainedModel::Mlp(mlp::Mlp::fit(
            inputs, targets, weights, cfg, seed,
        )?)),
        ModelConfig::GradientBoosting | ModelConfig::AdaBoost => {
            Err(Error::UnsupportedModel(config.kind().into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dispatch_predicts_with_either_family() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let t = array![[0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8]];
        let w = Array2::from_elem((4, 2), 1.0);
        let tree_cfg = ModelConfig::DecisionTree(tree::TreeConfig::default());
        let mlp_cfg = ModelConfig::Mlp(mlp::MlpConfig {
            epochs: 2,
            batch_size: 2,
            hidden: vec![4],
            ..Default::default()
        });
        for cfg in [tree_cfg, mlp_cfg] {
            let m = fit_model(&cfg, &x.view(), &t.view(), &w.view(), 5).unwrap();
            assert_eq!(m.input_dim(), 2);
            assert_eq!(m.k_max(), 2);
            let batch = m.predict_batch(&x.view()).unwrap();
            for i in 0..4 {
                let row = m.predict_row(&[x[(i, 0)], x[(i, 1)]]).unwrap();
                assert_eq!(batch.row(i).to_vec(), row, "batch == per-row, {}", m.kind());
            }
        }
    }

    use ndarray::Array2;

    #[test]
    fn reserved_families_report_unsupported() {
        let x = array![[0.0], [1.0]];
        let t = array![[0.0], [1.0]];
        let w = Array2::from_elem((2, 1), 1.0);
        let err = fit_model(
            &ModelConfig::GradientBoosting,
            &x.view(),
            &t.view(),
            &w.view(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedModel(ref s) if s == "gradient_boosting"));
        let err =
            fit_model(&ModelConfig::AdaBoost, &x.view(), &t.view(), &w.view(), 0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedModel(_)));
    }

    #[test]
    fn model_config_json_round_trip() {
        let cfg = ModelConfig::Mlp(mlp::MlpConfig::default());
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"type\":\"mlp\""));
        let back: ModelConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
        let tree: ModelConfig =
            serde_json::from_str(r#"{"type":"decision_tree","max_depth":4,"min_samples_split":2}"#)
                .unwrap();
        assert!(matches!(tree, ModelConfig::DecisionTree(ref c) if c.max_depth == Some(4)));
    }

    #[test]
    fn validation_rejects_bad_shapes_and_values() {
        let x = array![[0.0], [1.0]];
        let t = array![[0.0], [1.0]];
        let good = Array2::from_elem((2, 1), 1.0);
        assert!(validate_fit_inputs(&x.view(), &t.view(), &good.view()).is_ok());

        let bad_w = Array2::from_elem((3, 1), 1.0);
        assert!(matches!(
            validate_fit_inputs(&x.view(), &t.view(), &bad_w.view()),
            Err(Error::ShapeMismatch(_))
        ));

        let nan_t = array![[0.0], [f64::NAN]];
        assert!(matches!(
            validate_fit_inputs(&x.view(), &nan_t.view(), &good.view()),
            Err(Error::NonFiniteInput("targets"))
        ));

        let neg_w = array![[1.0], [-1.0]];
        assert!(matches!(
            validate_fit_inputs(&x.view(), &t.view(), &neg_w.view()),
            Err(Error::NonFiniteInput("weights"))
        ));
    }
}
