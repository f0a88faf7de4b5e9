use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::par::{self, Execution};
use crate::series::ChargingLabelSeries;

use super::{ModelError, TrainParams};

pub const FORMAT_VERSION: u64 = 1;

const PREDICT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    GradientBoosted,
}

/// Serialized as `{"feature", "threshold", "left", "right"}` or `{"value"}`;
/// `left`/`right` index into the owning tree's node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Flat node array, root at index 0, children after their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        Self { nodes }
    }

    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[feature] < threshold { left } else { right };
                }
                TreeNode::Leaf { value } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = *node {
                depth[left] = depth[i] + 1;
                depth[right] = depth[i] + 1;
                max = max.max(depth[i] + 1);
            }
        }
        max
    }

    fn validate(&self, n_features: usize, max_depth: usize) -> Result<(), String> {
        let n = self.nodes.len();
        if n == 0 {
            return Err("tree with no nodes".into());
        }
        let mut parents = vec![0u32; n];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature >= n_features {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i}: non-finite threshold"));
                    }
                    for c in [left, right] {
                        if c <= i || c >= n {
                            return Err(format!("node {i}: child {c} out of order"));
                        }
                        parents[c] += 1;
                    }
                    if left == right {
                        return Err(format!("node {i}: both children are {left}"));
                    }
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(format!("node {i}: non-finite leaf value"));
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err("node array is not a tree".into());
        }
        if self.depth() > max_depth {
            return Err(format!("tree depth {} exceeds max_depth {max_depth}", self.depth()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeEnsembleModel {
    pub format_version: u64,
    pub kind: ModelKind,
    pub params: TrainParams,
    pub feature_schema: Vec<String>,
    /// Log-odds prior for boosting; 0 for forests.
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

impl TreeEnsembleModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let corrupt = |m: String| Err(ModelError::CorruptModel(m));
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(self.format_version));
        }
        if self.kind != self.params.kind() {
            return corrupt("kind does not match params".into());
        }
        if let Err(e) = self.params.validate() {
            return corrupt(e.to_string());
        }
        if self.trees.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        if !self.base_score.is_finite() {
            return corrupt("non-finite base_score".into());
        }
        let d = self.feature_schema.len();
        let depth = self.params.max_depth();
        for (t, tree) in self.trees.iter().enumerate() {
            if let Err(e) = tree.validate(d, depth) {
                return corrupt(format!("tree {t}: {e}"));
            }
        }
        Ok(())
    }

    /// Probability of the positive class for one row.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.kind {
            ModelKind::RandomForest => {
                let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
                (sum / self.trees.len() as f64).clamp(0.0, 1.0)
            }
            ModelKind::GradientBoosted => {
                sigmoid(self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>())
            }
        }
    }

    fn check_input(&self, features: &FeatureMatrix) -> Result<(), ModelError> {
        if self.trees.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        if features.column_names() != self.feature_schema.as_slice() {
            return Err(ModelError::SchemaMismatch {
                expected: self.feature_schema.clone(),
                found: features.column_names().to_vec(),
            });
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn predict_proba(model: &TreeEnsembleModel, features: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
    predict_proba_with(model, features, Execution::default())
}

pub fn predict_proba_with(
    model: &TreeEnsembleModel,
    features: &FeatureMatrix,
    exec: Execution,
) -> Result<Vec<f64>, ModelError> {
    model.check_input(features)?;
    let n = features.n_rows();
    let chunks = par::map_range(exec, n.div_ceil(PREDICT_CHUNK), |c| {
        let lo = c * PREDICT_CHUNK;
        let hi = (lo + PREDICT_CHUNK).min(n);
        (lo..hi).map(|i| model.predict_row(features.row(i))).collect::<Vec<_>>()
    });
    Ok(chunks.concat())
}

/// Label 1 iff the probability is strictly above `decision_threshold`.
pub fn classify(
    model: &TreeEnsembleModel,
    features: &FeatureMatrix,
    decision_threshold: f64,
) -> Result<ChargingLabelSeries, ModelError> {
    let p = predict_proba(model, features)?;
    Ok(ChargingLabelSeries::from_bools(p.into_iter().map(|p| p > decision_threshold)))
}

pub fn to_model_string(model: &TreeEnsembleModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_model_str(text: &str) -> Result<TreeEnsembleModel, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(ModelError::UnsupportedVersion(v)),
        None => return Err(ModelError::CorruptModel("missing or invalid format_version".into())),
    }
    let model: TreeEnsembleModel =
        serde_json::from_value(value).map_err(|e| ModelError::CorruptModel(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

pub fn serialize_model(model: &TreeEnsembleModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, to_model_string(model))?;
    Ok(())
}

pub fn deserialize_model(path: impl AsRef<Path>) -> Result<TreeEnsembleModel, ModelError> {
    from_model_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::GbdtParams;

    fn stump_model() -> TreeEnsembleModel {
        TreeEnsembleModel {
            format_version: FORMAT_VERSION,
            kind: ModelKind::GradientBoosted,
            params: TrainParams::GradientBoosted(GbdtParams::default()),
            feature_schema: vec!["x".into()],
            base_score: 0.0,
            trees: vec![Tree::leaf(0.0)],
        }
    }

    fn one_col(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(None, vec!["x".into()], values.to_vec()).unwrap()
    }

    #[test]
    fn single_leaf_is_one_half() {
        let p = predict_proba(&stump_model(), &one_col(&[0.0, 3.0])).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_trees_error() {
        let mut m = stump_model();
        m.trees.clear();
        assert_eq!(predict_proba(&m, &one_col(&[1.0])), Err(ModelError::EmptyModel));
    }

    #[test]
    fn schema_mismatch() {
        let x = FeatureMatrix::new(None, vec!["y".into()], vec![1.0]).unwrap();
        assert!(matches!(predict_proba(&stump_model(), &x), Err(ModelError::SchemaMismatch { .. })));
    }

    #[test]
    fn strict_threshold_rule() {
        // leaf scores chosen so the probabilities are 0.2, 0.7 and 0.5
        let mut m = stump_model();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        m.trees = vec![Tree::from_nodes(vec![
            TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
            TreeNode::Leaf { value: logit(0.2) },
            TreeNode::Split { feature: 0, threshold: 1.5, left: 3, right: 4 },
            TreeNode::Leaf { value: logit(0.7) },
            TreeNode::Leaf { value: 0.0 },
        ])];
        let x = one_col(&[0.0, 1.0, 2.0]);
        let p = predict_proba(&m, &x).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12 && p[2] == 0.5);
        assert_eq!(classify(&m, &x, 0.5).unwrap().labels(), &[0, 1, 0]);
        assert_eq!(classify(&m, &x, 0.0).unwrap().labels(), &[1, 1, 1]);
        assert_eq!(classify(&m, &x, 1.0).unwrap().labels(), &[0, 0, 0]);
    }

    #[test]
    fn sigmoid_is_bounded() {
        for x in [-1e308, -800.0, -1.0, 0.0, 1.0, 800.0, 1e308] {
            let p = sigmoid(x);
            assert!((0.0..=1.0).contains(&p) && p.is_finite());
        }
    }

    #[test]
    fn text_round_trip_and_guards() {
        let m = stump_model();
        let s = to_model_string(&m);
        assert_eq!(to_model_string(&from_model_str(&s).unwrap()), s);
        assert_eq!(
            from_model_str(&s.replace("\"format_version\": 1", "\"format_version\": 999")),
            Err(ModelError::UnsupportedVersion(999))
        );
        assert!(matches!(from_model_str(&s[..s.len() / 2]), Err(ModelError::CorruptModel(_))));
        assert!(matches!(
            from_model_str(&s.replace("\"gradient_boosted\",", "\"random_forest\",")),
            Err(ModelError::CorruptModel(_))
        ));
    }

    #[test]
    fn structural_validation() {
        let mut m = stump_model();
        m.trees = vec![Tree::from_nodes(vec![
            TreeNode::Split { feature: 3, threshold: 0.0, left: 1, right: 2 },
            TreeNode::Leaf { value: 0.0 },
            TreeNode::Leaf { value: 0.0 },
        ])];
        assert!(matches!(m.validate(), Err(ModelError::CorruptModel(_))));
        m.trees = vec![Tree::from_nodes(vec![
            TreeNode::Split { feature: 0, threshold: 0.0, left: 0, right: 1 },
            TreeNode::Leaf { value: 0.0 },
        ])];
        assert!(matches!(m.validate(), Err(ModelError::CorruptModel(_))));
    }
}
