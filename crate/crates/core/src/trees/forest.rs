use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;
use crate::par::{self, Execution};
use crate::seeding::derive_seed;
use crate::series::ChargingLabelSeries;

use super::data::TrainingSet;
use super::grow::{grow, Criterion, FeaturePick};
use super::model::{ModelKind, TreeEnsembleModel, FORMAT_VERSION};
use super::{ForestParams, ModelError, TrainOutcome, TrainParams};

const TREE_STREAM: u64 = 0x5246;

#[derive(Debug, Clone, Copy, Default)]
struct ClassStats {
    weight: f64,
    positive: f64,
}

struct Gini<'a> {
    weights: &'a [f64],
    labels: &'a [u8],
    min_leaf: f64,
}

impl Gini<'_> {
    // weight times Gini impurity, halved
    fn impurity(s: &ClassStats) -> f64 {
        if s.weight <= 0.0 {
            return 0.0;
        }
        s.positive * (s.weight - s.positive) / s.weight
    }
}

impl Criterion for Gini<'_> {
    type Stats = ClassStats;

    #[inline]
    fn row(&self, r: usize) -> ClassStats {
        let w = self.weights[r];
        ClassStats { weight: w, positive: if self.labels[r] == 1 { w } else { 0.0 } }
    }

    #[inline]
    fn add(acc: &mut ClassStats, s: &ClassStats) {
        acc.weight += s.weight;
        acc.positive += s.positive;
    }

    #[inline]
    fn diff(total: &ClassStats, part: &ClassStats) -> ClassStats {
        ClassStats { weight: total.weight - part.weight, positive: total.positive - part.positive }
    }

    fn splittable(&self, node: &ClassStats) -> bool {
        node.positive > 0.0 && node.positive < node.weight && node.weight >= 2.0 * self.min_leaf
    }

    #[inline]
    fn gain(&self, parent: &ClassStats, left: &ClassStats, right: &ClassStats) -> Option<f64> {
        if left.weight < self.min_leaf || right.weight < self.min_leaf {
            return None;
        }
        Some(2.0 * (Self::impurity(parent) - Self::impurity(left) - Self::impurity(right)) / parent.weight)
    }

    // zero-gain splits of impure nodes are kept
    fn accept(&self, gain: f64) -> bool {
        gain >= 0.0
    }

    fn leaf(&self, node: &ClassStats) -> f64 {
        if node.weight > 0.0 {
            node.positive / node.weight
        } else {
            0.0
        }
    }
}

pub fn train_random_forest(
    features: &FeatureMatrix,
    labels: &ChargingLabelSeries,
    params: &ForestParams,
) -> Result<TrainOutcome, ModelError> {
    train_random_forest_with(features, labels, params, Execution::default())
}

/// Trees are grown independently from positional seeds, so the result does
/// not depend on `exec`.
pub fn train_random_forest_with(
    features: &FeatureMatrix,
    labels: &ChargingLabelSeries,
    params: &ForestParams,
    exec: Execution,
) -> Result<TrainOutcome, ModelError> {
    params.validate()?;
    let data = TrainingSet::new(features, labels)?;
    let n = data.n_rows();
    let k = params.features_for(data.n_features());

    let trees = par::map_range(exec, params.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, TREE_STREAM, t as u64));
        let mut weights = vec![if params.bootstrap { 0.0 } else { 1.0 }; n];
        if params.bootstrap {
            for _ in 0..n {
                weights[rng.random_range(0..n)] += 1.0;
            }
        }
        let include: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        let crit = Gini { weights: &weights, labels: data.labels(), min_leaf: params.min_samples_leaf as f64 };
        let pick = FeaturePick::Subset { k, rng: &mut rng };
        grow(&data, &crit, Some(&include), params.max_depth, pick, Execution::Sequential).tree
    });

    let model = TreeEnsembleModel {
        format_version: FORMAT_VERSION,
        kind: ModelKind::RandomForest,
        params: TrainParams::RandomForest(params.clone()),
        feature_schema: data.schema().to_vec(),
        base_score: 0.0,
        trees,
    };
    Ok(TrainOutcome { model, loss_trace: Vec::new(), degenerate: data.is_degenerate() })
}
