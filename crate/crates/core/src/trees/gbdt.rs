use crate::features::FeatureMatrix;
use crate::par::Execution;
use crate::series::ChargingLabelSeries;

use super::data::TrainingSet;
use super::grow::{grow, Criterion, FeaturePick, NO_NODE};
use super::model::{sigmoid, ModelKind, TreeEnsembleModel, TreeNode, FORMAT_VERSION};
use super::{GbdtParams, ModelError, TrainOutcome, TrainParams};

const BASE_SCORE_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default)]
struct GradStats {
    g: f64,
    h: f64,
}

struct Newton<'a> {
    grad: &'a [f64],
    hess: &'a [f64],
    lambda: f64,
    min_child_weight: f64,
    learning_rate: f64,
}

impl Newton<'_> {
    #[inline]
    fn score(&self, s: &GradStats) -> Option<f64> {
        let denom = s.h + self.lambda;
        (denom > 0.0).then(|| s.g * s.g / denom)
    }
}

impl Criterion for Newton<'_> {
    type Stats = GradStats;

    #[inline]
    fn row(&self, r: usize) -> GradStats {
        GradStats { g: self.grad[r], h: self.hess[r] }
    }

    #[inline]
    fn add(acc: &mut GradStats, s: &GradStats) {
        acc.g += s.g;
        acc.h += s.h;
    }

    #[inline]
    fn diff(total: &GradStats, part: &GradStats) -> GradStats {
        GradStats { g: total.g - part.g, h: total.h - part.h }
    }

    fn splittable(&self, node: &GradStats) -> bool {
        node.h >= self.min_child_weight
    }

    #[inline]
    fn gain(&self, parent: &GradStats, left: &GradStats, right: &GradStats) -> Option<f64> {
        if left.h < self.min_child_weight || right.h < self.min_child_weight {
            return None;
        }
        Some(0.5 * (self.score(left)? + self.score(right)? - self.score(parent)?))
    }

    fn accept(&self, gain: f64) -> bool {
        gain > 0.0
    }

    fn leaf(&self, node: &GradStats) -> f64 {
        let denom = node.h + self.lambda;
        if denom > 0.0 {
            -node.g / denom * self.learning_rate
        } else {
            0.0
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn mean_log_loss(scores: &[f64], labels: &[u8], weights: &[f64]) -> f64 {
    let mut loss = 0.0;
    let mut total = 0.0;
    for ((&f, &y), &w) in scores.iter().zip(labels).zip(weights) {
        loss += w * if y == 1 { softplus(-f) } else { softplus(f) };
        total += w;
    }
    loss / total
}

pub fn train_gbdt(
    features: &FeatureMatrix,
    labels: &ChargingLabelSeries,
    params: &GbdtParams,
) -> Result<TrainOutcome, ModelError> {
    train_gbdt_with(features, labels, params, Execution::default())
}

/// Candidate features are scanned in parallel under `exec`; reductions run in
/// feature order, so the model is identical for either execution mode.
pub fn train_gbdt_with(
    features: &FeatureMatrix,
    labels: &ChargingLabelSeries,
    params: &GbdtParams,
    exec: Execution,
) -> Result<TrainOutcome, ModelError> {
    params.validate()?;
    let data = TrainingSet::new(features, labels)?;
    let n = data.n_rows();
    let y = data.labels();
    let weights: Vec<f64> = y.iter().map(|&v| if v == 1 { params.positive_class_weight } else { 1.0 }).collect();

    let rate = data.positives() as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln().clamp(-BASE_SCORE_LIMIT, BASE_SCORE_LIMIT);
    let mut scores = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut loss_trace = vec![mean_log_loss(&scores, y, &weights)];
    let mut trees = Vec::with_capacity(params.n_rounds);

    for _ in 0..params.n_rounds {
        for r in 0..n {
            let p = sigmoid(scores[r]);
            grad[r] = (p - y[r] as f64) * weights[r];
            hess[r] = p * (1.0 - p) * weights[r];
        }
        let crit = Newton {
            grad: &grad,
            hess: &hess,
            lambda: params.l2_leaf_regularization,
            min_child_weight: params.min_child_weight,
            learning_rate: params.learning_rate,
        };
        let grown = grow(&data, &crit, None, params.max_depth, FeaturePick::All, exec);
        let nodes = grown.tree.nodes();
        for (s, &leaf) in scores.iter_mut().zip(&grown.leaf_of) {
            debug_assert_ne!(leaf, NO_NODE);
            if let TreeNode::Leaf { value } = nodes[leaf as usize] {
                *s += value;
            }
        }
        loss_trace.push(mean_log_loss(&scores, y, &weights));
        trees.push(grown.tree);
    }

    let model = TreeEnsembleModel {
        format_version: FORMAT_VERSION,
        kind: ModelKind::GradientBoosted,
        params: TrainParams::GradientBoosted(params.clone()),
        feature_schema: data.schema().to_vec(),
        base_score,
        trees,
    };
    Ok(TrainOutcome { model, loss_trace, degenerate: data.is_degenerate() })
}
