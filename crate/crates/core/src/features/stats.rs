use serde::{Deserialize, Serialize};

use super::exact::{mean_and_variance, ExactSum};
use super::FeatureError;

/// Predecessor loads at or below this value (kW) are treated as zero.
pub const ZERO_GUARD_KW: f64 = 1e-9;

/// Relative-rise threshold for peak counting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakThreshold(f64);

impl PeakThreshold {
    pub fn new(theta: f64) -> Result<Self, FeatureError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(FeatureError::InvalidThreshold(theta));
        }
        Ok(Self(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Whether the step `prev -> cur` is a peak.
    ///
    /// A rise from (near) zero to a positive load counts as an infinite
    /// relative rise.
    #[inline]
    pub fn is_peak(self, prev: f64, cur: f64) -> bool {
        if prev <= ZERO_GUARD_KW {
            cur > ZERO_GUARD_KW
        } else {
            (cur - prev) / prev > self.0
        }
    }
}

impl Default for PeakThreshold {
    fn default() -> Self {
        Self(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub median: f64,
    pub sample_count: usize,
}

impl WindowStats {
    pub(crate) fn from_parts(
        sum: &ExactSum,
        sum_sq: &ExactSum,
        count: usize,
        minimum: f64,
        maximum: f64,
        median: f64,
    ) -> Self {
        let (mean, variance) = mean_and_variance(sum, sum_sq, count);
        Self {
            // rounding of sum/count may land one ulp outside the range
            mean: mean.clamp(minimum, maximum),
            variance,
            std_dev: variance.sqrt(),
            minimum,
            maximum,
            median,
            sample_count: count,
        }
    }

    /// `[mean, std, var, min, max, median]`, the column order used in feature rows.
    pub fn to_feature_block(&self) -> [f64; 6] {
        [self.mean, self.std_dev, self.variance, self.minimum, self.maximum, self.median]
    }
}

/// Median of an even-sized window: mean of the two central order statistics.
#[inline]
pub(crate) fn middle_of(a: f64, b: f64) -> f64 {
    (a + b) / 2.0
}

/// Statistics of one window, computed from scratch.
pub fn compute_window_stats(values: &[f64]) -> Result<WindowStats, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyWindow);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::InvalidSample { index: i, value: values[i] });
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { middle_of(sorted[n / 2 - 1], sorted[n / 2]) };

    let mut sum = ExactSum::new();
    let mut sum_sq = ExactSum::new();
    for &v in values {
        sum.add(v);
        sum_sq.add_square(v);
    }
    Ok(WindowStats::from_parts(&sum, &sum_sq, n, sorted[0], sorted[n - 1], median))
}

/// Number of consecutive in-window pairs whose relative rise exceeds the threshold.
pub fn count_peaks(values: &[f64], threshold: PeakThreshold) -> Result<u32, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyWindow);
    }
    Ok(values.windows(2).filter(|w| threshold.is_peak(w[0], w[1])).count() as u32)
}
