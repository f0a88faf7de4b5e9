use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rolling::SliceWindow;
use super::stats::{compute_window_stats, count_peaks, PeakThreshold};
use super::window::{window_bounds, WindowKind, WindowSpec};
use super::FeatureError;
use crate::par::{self, Execution};
use crate::series::LoadSeries;

pub const OFFLINE_WIDTH: usize = 21;
pub const ONLINE_WIDTH: usize = 13;

const STAT_NAMES: [&str; 6] = ["mean", "std", "var", "min", "max", "median"];

/// Rows featurized per task when the batch path runs in parallel.
const CHUNK_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Offline,
    Online,
}

impl FeatureMode {
    pub fn width(self) -> usize {
        match self {
            FeatureMode::Offline => OFFLINE_WIDTH,
            FeatureMode::Online => ONLINE_WIDTH,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Offline => "offline",
            FeatureMode::Online => "online",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "offline" => Ok(FeatureMode::Offline),
            "online" => Ok(FeatureMode::Online),
            other => Err(format!("unknown mode `{other}` (expected offline or online)")),
        }
    }
}

/// Window lengths and peak threshold for both feature sets.
///
/// Offline rows use centered, forward and backward windows of `window`
/// samples. Online rows use backward windows of `window` and
/// `short_window` samples plus the peak count of the longer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window: usize,
    pub short_window: usize,
    pub centered_offset: i64,
    pub threshold: PeakThreshold,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { window: 360, short_window: 90, centered_offset: 0, threshold: PeakThreshold::default() }
    }
}

impl FeatureConfig {
    pub fn with_window(window: usize) -> Self {
        Self { window, ..Self::default() }
    }

    fn offline_specs(&self) -> Result<[WindowSpec; 3], FeatureError> {
        Ok([
            WindowSpec::centered(self.window, self.centered_offset)?,
            WindowSpec::forward(self.window)?,
            WindowSpec::backward(self.window)?,
        ])
    }

    fn online_specs(&self) -> Result<[WindowSpec; 2], FeatureError> {
        Ok([WindowSpec::backward(self.window)?, WindowSpec::backward(self.short_window)?])
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        self.offline_specs()?;
        self.online_specs()?;
        Ok(())
    }

    /// Column names in row order.
    pub fn column_names(&self, mode: FeatureMode) -> Vec<String> {
        let block = |kind: WindowKind, n: usize, with_peaks: bool| {
            let prefix = format!("{}{}", kind.prefix(), n);
            let mut cols: Vec<String> = STAT_NAMES.iter().map(|s| format!("{prefix}_{s}")).collect();
            if with_peaks {
                cols.push(format!("{prefix}_peaks"));
            }
            cols
        };
        match mode {
            FeatureMode::Offline => [WindowKind::Centered, WindowKind::Forward, WindowKind::Backward]
                .into_iter()
                .flat_map(|k| block(k, self.window, true))
                .collect(),
            FeatureMode::Online => {
                let mut cols = block(WindowKind::Backward, self.window, false);
                cols.extend(block(WindowKind::Backward, self.short_window, false));
                cols.push(format!("b{}_peaks", self.window));
                cols
            }
        }
    }
}

/// One feature row per time step, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    mode: Option<FeatureMode>,
    column_names: Vec<String>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(mode: Option<FeatureMode>, column_names: Vec<String>, data: Vec<f64>) -> Result<Self, FeatureError> {
        let width = column_names.len();
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(FeatureError::Shape(format!("{} values do not fill rows of {width}", data.len())));
        }
        if let Some(m) = mode {
            if width != m.width() {
                return Err(FeatureError::Shape(format!("{m} rows need {} columns, found {width}", m.width())));
            }
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { row: i / width, column: i % width });
        }
        Ok(Self { mode, column_names, data })
    }

    pub fn mode(&self) -> Option<FeatureMode> {
        self.mode
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.n_cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Concatenates matrices with identical schemas.
    pub fn vstack<'a>(parts: impl IntoIterator<Item = &'a FeatureMatrix>) -> Result<Self, FeatureError> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or_else(|| FeatureError::Shape("nothing to stack".into()))?;
        let mut out = first.clone();
        for m in iter {
            if m.column_names != out.column_names {
                return Err(FeatureError::Shape("column schemas differ".into()));
            }
            out.data.extend_from_slice(&m.data);
        }
        Ok(out)
    }

    /// Keeps every `stride`-th row.
    pub fn take_every(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let data = self.rows().step_by(stride).flatten().copied().collect();
        Self { mode: self.mode, column_names: self.column_names.clone(), data }
    }
}

fn check_index(load: &LoadSeries, t: usize) -> Result<(), FeatureError> {
    if t >= load.len() {
        return Err(FeatureError::IndexOutOfRange { index: t, len: load.len() });
    }
    Ok(())
}

fn window_block(
    values: &[f64],
    spec: &WindowSpec,
    t: usize,
    threshold: PeakThreshold,
) -> Result<([f64; 6], u32), FeatureError> {
    let (lo, hi) = window_bounds(spec, t, values.len())?;
    let slice = &values[lo..=hi];
    Ok((compute_window_stats(slice)?.to_feature_block(), count_peaks(slice, threshold)?))
}

/// Offline feature row at step `t`: centered, forward and backward blocks of
/// `[mean, std, var, min, max, median, peaks]`.
pub fn extract_offline_features(load: &LoadSeries, t: usize, config: &FeatureConfig) -> Result<Vec<f64>, FeatureError> {
    check_index(load, t)?;
    let mut row = Vec::with_capacity(OFFLINE_WIDTH);
    for spec in config.offline_specs()? {
        let (stats, peaks) = window_block(load.values(), &spec, t, config.threshold)?;
        row.extend_from_slice(&stats);
        row.push(peaks as f64);
    }
    Ok(row)
}

/// Online feature row at step `t`, reading only samples `0..=t`.
pub fn extract_online_features(load: &LoadSeries, t: usize, config: &FeatureConfig) -> Result<Vec<f64>, FeatureError> {
    check_index(load, t)?;
    let past = &load.values()[..=t];
    let [long, short] = config.online_specs()?;
    let (long_stats, long_peaks) = window_block(past, &long, t, config.threshold)?;
    let (short_stats, _) = window_block(past, &short, t, config.threshold)?;
    let mut row = Vec::with_capacity(ONLINE_WIDTH);
    row.extend_from_slice(&long_stats);
    row.extend_from_slice(&short_stats);
    row.push(long_peaks as f64);
    Ok(row)
}

/// Where one window's statistics (and optionally its peak count) land in a row.
#[derive(Clone, Copy)]
struct BlockLayout {
    spec: WindowSpec,
    stats_col: usize,
    peaks_col: Option<usize>,
}

fn layout(mode: FeatureMode, config: &FeatureConfig) -> Result<Vec<BlockLayout>, FeatureError> {
    Ok(match mode {
        FeatureMode::Offline => config
            .offline_specs()?
            .into_iter()
            .enumerate()
            .map(|(i, spec)| BlockLayout { spec, stats_col: 7 * i, peaks_col: Some(7 * i + 6) })
            .collect(),
        FeatureMode::Online => {
            let [long, short] = config.online_specs()?;
            vec![
                BlockLayout { spec: long, stats_col: 0, peaks_col: Some(12) },
                BlockLayout { spec: short, stats_col: 6, peaks_col: None },
            ]
        }
    })
}

/// Featurizes rows `range` of `values` by sliding each window along it.
fn featurize_range(
    values: &[f64],
    blocks: &[BlockLayout],
    range: std::ops::Range<usize>,
    threshold: PeakThreshold,
    width: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; range.len() * width];
    for block in blocks {
        let mut window = SliceWindow::new(values, threshold);
        for (r, t) in range.clone().enumerate() {
            let (lo, hi) = block.spec.bounds_unchecked(t, values.len());
            let agg = window.advance_to(lo, hi);
            let row = &mut out[r * width..(r + 1) * width];
            row[block.stats_col..block.stats_col + 6].copy_from_slice(&agg.stats().to_feature_block());
            if let Some(c) = block.peaks_col {
                row[c] = agg.peaks() as f64;
            }
        }
    }
    out
}

/// Feature matrix for every step of `load`.
pub fn featurize_series(
    load: &LoadSeries,
    mode: FeatureMode,
    config: &FeatureConfig,
) -> Result<FeatureMatrix, FeatureError> {
    featurize_series_with(load, mode, config, Execution::default())
}

/// As [`featurize_series`], choosing sequential or parallel execution. Output
/// is identical for both.
pub fn featurize_series_with(
    load: &LoadSeries,
    mode: FeatureMode,
    config: &FeatureConfig,
    exec: Execution,
) -> Result<FeatureMatrix, FeatureError> {
    let values = load.values();
    let blocks = layout(mode, config)?;
    let chunks: Vec<std::ops::Range<usize>> =
        (0..values.len()).step_by(CHUNK_ROWS).map(|s| s..(s + CHUNK_ROWS).min(values.len())).collect();
    let parts = par::map(exec, &chunks, |range| {
        featurize_range(values, &blocks, range.clone(), config.threshold, mode.width())
    });
    FeatureMatrix::new(Some(mode), config.column_names(mode), parts.concat())
}
