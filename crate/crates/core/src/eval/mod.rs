//! Per-step detection metrics, feeder-level train/validation/test splits,
//! end-to-end experiments and window-length sweeps.

mod experiment;
mod io;
mod metrics;
mod split;

use thiserror::Error;

use crate::features::FeatureError;
use crate::series::SeriesError;
use crate::trees::ModelError;

pub use experiment::{
    featurize_feeders, format_metrics_report, model_name, run_experiment, window_length_sweep,
    window_length_sweep_models, write_experiment_artifacts, ExperimentConfig, ExperimentManifest, ExperimentResult,
    FeaturizedFeeder, SweepReport, SweepRow, DEFAULT_TRAIN_STRIDE,
};
pub use io::{align, read_label_csv, write_predictions_csv, LabelColumn, PREDICTION_HEADER};
pub use metrics::{confusion, f1_score, metrics, ConfusionCounts, MetricCell, MetricsReport};
pub use split::{split_by_feeder, SplitAssignment, SplitRatios};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("label length mismatch: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("{0} feeders cannot fill non-empty train, validation and test groups")]
    InsufficientFeeders(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}
