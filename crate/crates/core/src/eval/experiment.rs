use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::{featurize_series_with, FeatureConfig, FeatureMatrix, FeatureMode};
use crate::par::{self, Execution};
use crate::series::{ChargingLabelSeries, FeederRecordSet};
use crate::trees::{self, predict_proba_with, ModelKind, TrainOutcome, TrainParams};

use super::metrics::{confusion, metrics, MetricCell, MetricsReport};
use super::split::{split_by_feeder, SplitAssignment, SplitRatios};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: FeatureMode,
    pub features: FeatureConfig,
    pub model: TrainParams,
    /// Drives the feeder shuffle.
    pub seed: u64,
    pub ratios: SplitRatios,
    /// Every `train_stride`-th row of each training feeder is used for fitting.
    pub train_stride: usize,
    pub decision_threshold: f64,
}

impl ExperimentConfig {
    pub fn new(mode: FeatureMode, model: TrainParams) -> Self {
        Self {
            mode,
            features: FeatureConfig::default(),
            model,
            seed: 7,
            ratios: SplitRatios::default(),
            train_stride: DEFAULT_TRAIN_STRIDE,
            decision_threshold: 0.5,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        self.features.validate()?;
        self.model.validate()?;
        if self.train_stride == 0 {
            return Err(EvalError::InvalidConfig("train_stride must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(EvalError::InvalidConfig("decision_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_TRAIN_STRIDE: usize = 10;

/// Features and labels of one feeder.
#[derive(Debug, Clone)]
pub struct FeaturizedFeeder {
    pub feeder_id: String,
    pub features: FeatureMatrix,
    pub labels: ChargingLabelSeries,
}

/// Featurizes the listed feeders, in the order given.
pub fn featurize_feeders(
    feeders: &[&FeederRecordSet],
    mode: FeatureMode,
    config: &FeatureConfig,
    exec: Execution,
) -> Result<Vec<FeaturizedFeeder>, EvalError> {
    par::map(exec, feeders, |f| {
        let features = featurize_series_with(&f.load, mode, config, Execution::Sequential)?;
        Ok(FeaturizedFeeder { feeder_id: f.feeder_id.clone(), features, labels: f.labels.clone() })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub mode: FeatureMode,
    pub model: ModelKind,
    pub params: TrainParams,
    pub feature_config: FeatureConfig,
    pub window_length: usize,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub split: SplitAssignment,
    pub train_stride: usize,
    pub decision_threshold: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub evaluated_feeders: Vec<String>,
    /// No evaluated feeder appears in the training or validation groups.
    pub test_isolated: bool,
    pub degenerate_training_data: bool,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: MetricsReport,
    pub manifest: ExperimentManifest,
    pub outcome: TrainOutcome,
}

fn find<'a>(feeders: &'a [FeederRecordSet], id: &str) -> &'a FeederRecordSet {
    feeders.iter().find(|f| f.feeder_id == id).expect("split ids come from the corpus")
}

fn check_unique(feeders: &[FeederRecordSet]) -> Result<Vec<String>, EvalError> {
    let ids: Vec<String> = feeders.iter().map(|f| f.feeder_id.clone()).collect();
    let mut seen = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(EvalError::InvalidConfig(format!("duplicate feeder id {dup}")));
    }
    Ok(ids)
}

/// Splits by feeder, trains on the training group and scores the test group.
pub fn run_experiment(
    feeders: &[FeederRecordSet],
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<ExperimentResult, EvalError> {
    let split = split_feeders(feeders, config)?;
    let (train, test) = featurize_split(feeders, &split, config.mode, &config.features, exec)?;
    run_on_features(&train, &test, &split, config, exec)
}

fn split_feeders(feeders: &[FeederRecordSet], config: &ExperimentConfig) -> Result<SplitAssignment, EvalError> {
    config.validate()?;
    let ids = check_unique(feeders)?;
    split_by_feeder(&ids, config.ratios, config.seed)
}

fn featurize_split(
    feeders: &[FeederRecordSet],
    split: &SplitAssignment,
    mode: FeatureMode,
    features: &FeatureConfig,
    exec: Execution,
) -> Result<(Vec<FeaturizedFeeder>, Vec<FeaturizedFeeder>), EvalError> {
    let pick = |ids: &[String]| ids.iter().map(|id| find(feeders, id)).collect::<Vec<_>>();
    let train = featurize_feeders(&pick(&split.train), mode, features, exec)?;
    let test = featurize_feeders(&pick(&split.test), mode, features, exec)?;
    Ok((train, test))
}

fn stack_training(
    train: &[FeaturizedFeeder],
    stride: usize,
) -> Result<(FeatureMatrix, ChargingLabelSeries), EvalError> {
    let parts: Vec<FeatureMatrix> = train.iter().map(|f| f.features.take_every(stride)).collect();
    let x = FeatureMatrix::vstack(&parts)?;
    let y = ChargingLabelSeries::new(
        train.iter().flat_map(|f| f.labels.labels().iter().step_by(stride).copied()).collect(),
    )?;
    Ok((x, y))
}

fn run_on_features(
    train: &[FeaturizedFeeder],
    test: &[FeaturizedFeeder],
    split: &SplitAssignment,
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<ExperimentResult, EvalError> {
    let (x, y) = stack_training(train, config.train_stride)?;
    let outcome = trees::train(&x, &y, &config.model, exec)?;

    let mut counts = Default::default();
    let mut test_rows = 0;
    for f in test {
        let p = predict_proba_with(&outcome.model, &f.features, exec)?;
        let pred = ChargingLabelSeries::from_bools(p.into_iter().map(|p| p > config.decision_threshold));
        counts = confusion(&f.labels, &pred)?.merge(&counts);
        test_rows += f.labels.len();
    }
    let report = metrics(counts);

    let evaluated: Vec<String> = test.iter().map(|f| f.feeder_id.clone()).collect();
    let seen: HashSet<&String> = split.train.iter().chain(&split.validation).collect();
    let test_isolated = split.is_disjoint() && evaluated.iter().all(|id| !seen.contains(id));
    let manifest = ExperimentManifest {
        mode: config.mode,
        model: config.model.kind(),
        params: config.model.clone(),
        feature_config: config.features,
        window_length: config.features.window,
        seed: config.seed,
        ratios: config.ratios,
        split: split.clone(),
        train_stride: config.train_stride,
        decision_threshold: config.decision_threshold,
        train_rows: y.len(),
        test_rows,
        evaluated_feeders: evaluated,
        test_isolated,
        degenerate_training_data: outcome.degenerate,
        metrics: report,
    };
    Ok(ExperimentResult { report, manifest, outcome })
}

pub fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::RandomForest => "rf",
        ModelKind::GradientBoosted => "gbdt",
    }
}

/// `key=value` lines: mode, model, window_length, precision, recall, f1,
/// accuracy, tp, fp, fn, tn, seed.
pub fn format_metrics_report(manifest: &ExperimentManifest) -> String {
    let m = &manifest.metrics;
    let c = m.counts;
    let mut s = String::new();
    let _ = writeln!(s, "mode={}", manifest.mode);
    let _ = writeln!(s, "model={}", model_name(manifest.model));
    let _ = writeln!(s, "window_length={}", manifest.window_length);
    let _ = writeln!(s, "precision={}", MetricCell(m.precision));
    let _ = writeln!(s, "recall={}", MetricCell(m.recall));
    let _ = writeln!(s, "f1={}", MetricCell(m.f1));
    let _ = writeln!(s, "accuracy={}", MetricCell(m.accuracy));
    let _ = writeln!(s, "tp={}\nfp={}\nfn={}\ntn={}", c.tp, c.fp, c.fn_, c.tn);
    let _ = writeln!(s, "seed={}", manifest.seed);
    s
}

/// Writes `metrics.txt` and `manifest.json` into `dir`.
pub fn write_experiment_artifacts(manifest: &ExperimentManifest, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.txt"), format_metrics_report(manifest))?;
    let mut json = serde_json::to_string_pretty(manifest).map_err(|e| EvalError::Io(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub mode: FeatureMode,
    pub model: ModelKind,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("length,precision,recall,f1\n");
        for r in &self.rows {
            let m = &r.report;
            let _ =
                writeln!(s, "{},{},{},{}", r.length, MetricCell(m.precision), MetricCell(m.recall), MetricCell(m.f1));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{} {} window sweep\n", model_name(self.model), self.mode);
        let _ = writeln!(s, "{:>8} {:>10} {:>10} {:>10} {:>10}", "length", "precision", "recall", "f1", "accuracy");
        for r in &self.rows {
            let m = &r.report;
            let _ = writeln!(
                s,
                "{:>8} {:>10} {:>10} {:>10} {:>10}",
                r.length,
                MetricCell(m.precision).to_string(),
                MetricCell(m.recall).to_string(),
                MetricCell(m.f1).to_string(),
                MetricCell(m.accuracy).to_string()
            );
        }
        s
    }
}

/// One experiment per window length with everything else fixed.
pub fn window_length_sweep(
    feeders: &[FeederRecordSet],
    lengths: &[usize],
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<SweepReport, EvalError> {
    let mut reports = window_length_sweep_models(feeders, lengths, config, std::slice::from_ref(&config.model), exec)?;
    Ok(reports.remove(0))
}

/// As [`window_length_sweep`] for several models sharing each length's
/// features. Reports follow the order of `models`.
pub fn window_length_sweep_models(
    feeders: &[FeederRecordSet],
    lengths: &[usize],
    config: &ExperimentConfig,
    models: &[TrainParams],
    exec: Execution,
) -> Result<Vec<SweepReport>, EvalError> {
    if lengths.is_empty() || lengths[0] == 0 || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidConfig("window lengths must be >= 1 and strictly ascending".into()));
    }
    let mut reports: Vec<SweepReport> =
        models.iter().map(|m| SweepReport { mode: config.mode, model: m.kind(), rows: Vec::new() }).collect();
    let split = split_feeders(feeders, config)?;
    for &length in lengths {
        let features = FeatureConfig { window: length, ..config.features };
        let (train, test) = featurize_split(feeders, &split, config.mode, &features, exec)?;
        for (model, report) in models.iter().zip(&mut reports) {
            let cfg = ExperimentConfig { features, model: model.clone(), ..config.clone() };
            let result = run_on_features(&train, &test, &split, &cfg, exec)?;
            report.rows.push(SweepRow { length, report: result.report });
        }
    }
    Ok(reports)
}
