use std::collections::VecDeque;

use super::extract::{FeatureConfig, ONLINE_WIDTH};
use super::rolling::RollingStats;
use super::FeatureError;

/// Online feature extractor fed one sample at a time.
///
/// After `k` pushes the returned row equals
/// [`extract_online_features`](super::extract_online_features) at `t = k - 1`
/// on the accumulated series. Only the last `max(window, short_window) + 1`
/// samples are retained.
#[derive(Debug, Clone)]
pub struct OnlineExtractor {
    config: FeatureConfig,
    history: VecDeque<f64>,
    capacity: usize,
    next_index: usize,
    // trailing windows [t - window, t] and [t - short_window, t]
    long: RollingStats,
    short: RollingStats,
}

impl OnlineExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self, FeatureError> {
        config.validate()?;
        let capacity = config.window.max(config.short_window) + 1;
        Ok(Self {
            config,
            history: VecDeque::with_capacity(capacity),
            capacity,
            next_index: 0,
            long: RollingStats::new(config.threshold),
            short: RollingStats::new(config.threshold),
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// Number of samples pushed so far.
    pub fn samples_seen(&self) -> usize {
        self.next_index
    }

    /// Number of raw samples currently held.
    pub fn retained(&self) -> usize {
        self.history.len()
    }

    fn value_at(&self, index: usize) -> f64 {
        let first = self.next_index - self.history.len();
        self.history[index - first]
    }

    pub fn push(&mut self, sample: f64) -> Result<[f64; ONLINE_WIDTH], FeatureError> {
        if !(sample.is_finite() && sample >= 0.0) {
            return Err(FeatureError::InvalidSample { index: self.next_index, value: sample });
        }
        let t = self.next_index;
        // evict before appending
        for (length, is_long) in [(self.config.window, true), (self.config.short_window, false)] {
            if t > length {
                let old = t - length - 1;
                let (v, next) = (self.value_at(old), self.value_at(old + 1));
                let agg = if is_long { &mut self.long } else { &mut self.short };
                agg.evict(old, v, Some(next));
            }
        }
        let prev = t.checked_sub(1).map(|p| self.value_at(p));
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(sample);
        self.next_index += 1;
        self.long.push(t, sample, prev);
        self.short.push(t, sample, prev);

        let mut row = [0.0; ONLINE_WIDTH];
        row[..6].copy_from_slice(&self.long.stats().to_feature_block());
        row[6..12].copy_from_slice(&self.short.stats().to_feature_block());
        row[12] = self.long.peaks() as f64;
        Ok(row)
    }
}
