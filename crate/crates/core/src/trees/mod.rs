//! Tree-ensemble classifiers: a bagged random forest on Gini impurity and
//! second-order gradient boosting on logistic loss.
//!
//! Both trainers share one exact greedy grower that works level by level
//! over presorted columns. Candidate thresholds are midpoints between
//! consecutive distinct values and rows with `x < threshold` go left. Among
//! equal gains the lowest feature index wins, then the lowest threshold.

mod data;
mod forest;
mod gbdt;
mod grow;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::TrainingSet;
pub use forest::{train_random_forest, train_random_forest_with};
pub use gbdt::{train_gbdt, train_gbdt_with};
pub use model::{
    classify, deserialize_model, from_model_str, predict_proba, predict_proba_with, serialize_model, to_model_string,
    ModelKind, Tree, TreeEnsembleModel, TreeNode, FORMAT_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{rows} feature rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("label {value} at row {row} is not 0 or 1")]
    NonBinaryLabels { row: usize, value: u8 },
    #[error("invalid training parameters: {0}")]
    InvalidParams(String),
    #[error("model has no trees")]
    EmptyModel,
    #[error("feature schema mismatch: model expects {expected:?}, got {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` means `⌈√d⌉`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 12, min_samples_leaf: 5, features_per_split: None, bootstrap: true, seed: 0 }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParams(m.into()));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.features_per_split == Some(0) {
            return bad("features_per_split must be at least 1");
        }
        Ok(())
    }

    /// Features drawn per node for `d` columns.
    pub fn features_for(&self, d: usize) -> usize {
        self.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_leaf_regularization: f64,
    pub min_child_weight: f64,
    pub positive_class_weight: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            max_depth: 6,
            learning_rate: 0.1,
            l2_leaf_regularization: 1.0,
            min_child_weight: 1.0,
            positive_class_weight: 1.0,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParams(m.into()));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.l2_leaf_regularization >= 0.0 && self.l2_leaf_regularization.is_finite()) {
            return bad("l2_leaf_regularization must be finite and >= 0");
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return bad("min_child_weight must be finite and >= 0");
        }
        if !(self.positive_class_weight > 0.0 && self.positive_class_weight.is_finite()) {
            return bad("positive_class_weight must be finite and > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrainParams {
    RandomForest(ForestParams),
    GradientBoosted(GbdtParams),
}

impl TrainParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainParams::RandomForest(_) => ModelKind::RandomForest,
            TrainParams::GradientBoosted(_) => ModelKind::GradientBoosted,
        }
    }

    pub fn max_depth(&self) -> usize {
        match self {
            TrainParams::RandomForest(p) => p.max_depth,
            TrainParams::GradientBoosted(p) => p.max_depth,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            TrainParams::RandomForest(p) => p.validate(),
            TrainParams::GradientBoosted(p) => p.validate(),
        }
    }
}

/// A trained model plus training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TreeEnsembleModel,
    /// Mean weighted training log-loss: entry 0 is the prior, entry `k` follows round `k`.
    /// Empty for forests.
    pub loss_trace: Vec<f64>,
    /// All rows identical while labels are mixed, so no split exists.
    pub degenerate: bool,
}

/// Dispatches on the parameter kind.
pub fn train(
    features: &crate::features::FeatureMatrix,
    labels: &crate::series::ChargingLabelSeries,
    params: &TrainParams,
    exec: crate::par::Execution,
) -> Result<TrainOutcome, ModelError> {
    match params {
        TrainParams::RandomForest(p) => train_random_forest_with(features, labels, p, exec),
        TrainParams::GradientBoosted(p) => train_gbdt_with(features, labels, p, exec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(ForestParams::default().validate().is_ok());
        assert!(GbdtParams::default().validate().is_ok());
        assert_eq!(ForestParams::default().features_for(21), 5);
        assert_eq!(ForestParams::default().features_for(13), 4);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = GbdtParams { learning_rate: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = GbdtParams { learning_rate: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = GbdtParams { l2_leaf_regularization: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ForestParams { n_trees: 0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ForestParams { features_per_split: Some(0), ..Default::default() };
        assert!(p.validate().is_err());
    }
}
