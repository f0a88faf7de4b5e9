//! Sliding-window features for EV charging detection.
//!
//! Every window yields `[mean, std, var, min, max, median]` plus, where the
//! layout asks for it, the count of relative-rise peaks. Offline rows combine
//! centered, forward and backward windows; online rows only look backwards.

mod exact;
mod extract;
pub mod io;
mod rolling;
mod stats;
mod streaming;
mod window;

use thiserror::Error;

pub use exact::{mean_and_variance, ExactSum};
pub use extract::{
    extract_offline_features, extract_online_features, featurize_series, featurize_series_with, FeatureConfig,
    FeatureMatrix, FeatureMode, OFFLINE_WIDTH, ONLINE_WIDTH,
};
pub use rolling::RollingStats;
pub use stats::{compute_window_stats, count_peaks, PeakThreshold, WindowStats, ZERO_GUARD_KW};
pub use streaming::OnlineExtractor;
pub use window::{window_bounds, WindowKind, WindowSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty window")]
    EmptyWindow,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("peak threshold must be finite and positive, got {0}")]
    InvalidThreshold(f64),
    #[error("invalid sample {value} at index {index}")]
    InvalidSample { index: usize, value: f64 },
    #[error("non-finite feature at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("feature matrix shape: {0}")]
    Shape(String),
}
