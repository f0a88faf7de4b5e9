use std::error::Error;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use feeder_nilm::eval::{
    align, confusion, format_metrics_report, metrics, read_label_csv, run_experiment, window_length_sweep,
    write_experiment_artifacts, write_predictions_csv, ExperimentConfig, MetricCell, DEFAULT_TRAIN_STRIDE,
};
use feeder_nilm::features::io::{read_feature_csv, write_feature_csv};
use feeder_nilm::features::{
    featurize_series, FeatureConfig, FeatureMatrix, FeatureMode, OnlineExtractor, PeakThreshold,
};
use feeder_nilm::par::Execution;
use feeder_nilm::series::{parse_timestamp, read_feeder_csv, ChargingLabelSeries};
use feeder_nilm::synth::{generate_benchmark, load_benchmark, write_benchmark, FeederSynthConfig};
use feeder_nilm::trees::{
    deserialize_model, predict_proba, serialize_model, train, ForestParams, GbdtParams, ModelError, TrainParams,
};

type CliResult = Result<(), Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "feeder-nilm", version, about = "Detect EV charging in feeder-level load")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic feeder benchmark.
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        feeders: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        households: u64,
        #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
        days: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a feeder CSV into a feature CSV.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        windows: WindowArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model on one or more labelled feature CSVs.
    Train {
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        features: Vec<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Keep every n-th row of each input file.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        stride: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a feature CSV, or stream `timestamp,load_kw` rows from stdin.
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required_unless_present = "stream", conflicts_with = "stream")]
        features: Option<PathBuf>,
        #[arg(long, required_unless_present = "stream", conflicts_with = "stream")]
        out: Option<PathBuf>,
        /// Online detection over stdin, one output row per input row.
        #[arg(long)]
        stream: bool,
        #[command(flatten)]
        windows: WindowArgs,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Compare predicted labels against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feeder-split experiment over a generated benchmark directory.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// Directory for metrics.txt, manifest.json and model.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the experiment across window lengths.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, required = true, value_delimiter = ',')]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 90, value_parser = clap::value_parser!(u64).range(1..))]
        short_window: u64,
        /// Sweep CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Offline,
    Online,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Offline => FeatureMode::Offline,
            ModeArg::Online => FeatureMode::Online,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKindArg {
    Gbdt,
    Rf,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, default_value_t = 360, value_parser = clap::value_parser!(u64).range(1..))]
    window: u64,
    #[arg(long, default_value_t = 90, value_parser = clap::value_parser!(u64).range(1..))]
    short_window: u64,
    /// Relative-rise threshold for peak counting.
    #[arg(long, default_value_t = 1.0)]
    peak_threshold: f64,
}

impl WindowArgs {
    fn config(&self) -> Result<FeatureConfig, Box<dyn Error>> {
        let config = FeatureConfig {
            window: self.window as usize,
            short_window: self.short_window as usize,
            centered_offset: 0,
            threshold: PeakThreshold::new(self.peak_threshold)?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "gbdt")]
    model: ModelKindArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Boosting rounds or forest size.
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    min_child_weight: Option<f64>,
    #[arg(long)]
    positive_class_weight: Option<f64>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    features_per_split: Option<usize>,
}

impl ModelArgs {
    fn params(&self) -> Result<TrainParams, ModelError> {
        let params = match self.model {
            ModelKindArg::Gbdt => {
                let d = GbdtParams::default();
                TrainParams::GradientBoosted(GbdtParams {
                    n_rounds: self.trees.unwrap_or(d.n_rounds),
                    max_depth: self.max_depth.unwrap_or(d.max_depth),
                    learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
                    l2_leaf_regularization: self.lambda.unwrap_or(d.l2_leaf_regularization),
                    min_child_weight: self.min_child_weight.unwrap_or(d.min_child_weight),
                    positive_class_weight: self.positive_class_weight.unwrap_or(d.positive_class_weight),
                    seed: self.seed,
                })
            }
            ModelKindArg::Rf => {
                let d = ForestParams::default();
                TrainParams::RandomForest(ForestParams {
                    n_trees: self.trees.unwrap_or(d.n_trees),
                    max_depth: self.max_depth.unwrap_or(d.max_depth),
                    min_samples_leaf: self.min_samples_leaf.unwrap_or(d.min_samples_leaf),
                    features_per_split: self.features_per_split.or(d.features_per_split),
                    bootstrap: d.bootstrap,
                    seed: self.seed,
                })
            }
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark directory written by `synth`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_TRAIN_STRIDE as u64, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

impl RunArgs {
    fn config(&self, features: FeatureConfig) -> Result<ExperimentConfig, Box<dyn Error>> {
        let mut cfg = ExperimentConfig::new(self.mode.into(), self.model.params()?);
        cfg.features = features;
        cfg.seed = self.model.seed;
        cfg.train_stride = self.stride as usize;
        cfg.decision_threshold = self.threshold;
        Ok(cfg)
    }
}

fn check_threshold(t: f64) -> CliResult {
    if !(0.0..=1.0).contains(&t) {
        return Err(format!("decision threshold {t} is outside [0, 1]").into());
    }
    Ok(())
}

fn cmd_synth(feeders: u64, households: u64, days: u64, seed: u64, out: &Path) -> CliResult {
    let config = FeederSynthConfig {
        num_feeders: feeders as usize,
        households_per_feeder: households as usize,
        days: days as usize,
        rng_seed: seed,
        ..Default::default()
    };
    let bench = generate_benchmark(&config)?;
    write_benchmark(&bench, out)?;
    info!("wrote {} feeders to {}", bench.feeders.len(), out.display());
    Ok(())
}

fn cmd_featurize(input: &Path, mode: FeatureMode, config: &FeatureConfig, out: &Path) -> CliResult {
    let feeder = read_feeder_csv(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let features = featurize_series(&feeder.load, mode, config)?;
    write_feature_csv(out, &feeder.load, &features, Some(&feeder.labels))?;
    info!("wrote {} rows x {} features to {}", features.n_rows(), features.n_cols(), out.display());
    Ok(())
}

fn cmd_train(paths: &[PathBuf], model: &ModelArgs, stride: usize, out: &Path) -> CliResult {
    let params = model.params()?;
    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for p in paths {
        let table = read_feature_csv(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let y = table.labels.ok_or_else(|| format!("{}: no label column", p.display()))?;
        labels.extend(y.labels().iter().step_by(stride));
        parts.push(table.features.take_every(stride));
    }
    let x = FeatureMatrix::vstack(&parts)?;
    let y = ChargingLabelSeries::new(labels)?;
    let outcome = train(&x, &y, &params, Execution::default())?;
    if outcome.degenerate {
        log::warn!("training rows are all identical while labels are mixed; trees are single leaves");
    }
    serialize_model(&outcome.model, out)?;
    info!("trained on {} rows, wrote {}", x.n_rows(), out.display());
    Ok(())
}

fn cmd_detect_file(model: &Path, features: &Path, out: &Path, threshold: f64) -> CliResult {
    let model = deserialize_model(model)?;
    let table = read_feature_csv(features).map_err(|e| format!("{}: {e}", features.display()))?;
    let p = predict_proba(&model, &table.features)?;
    write_predictions_csv(out, &table.timestamps, &p, threshold)?;
    Ok(())
}

/// Reads `timestamp,load_kw[,...]` or bare `load_kw` rows and writes one
/// `timestamp,probability,label` row per input row, flushing each.
fn cmd_detect_stream(model: &Path, config: FeatureConfig, threshold: f64) -> CliResult {
    let model = deserialize_model(model)?;
    let expected = config.column_names(FeatureMode::Online);
    if model.feature_schema != expected {
        return Err(ModelError::SchemaMismatch { expected: model.feature_schema.clone(), found: expected }.into());
    }
    if model.trees.is_empty() {
        return Err(ModelError::EmptyModel.into());
    }
    let mut extractor = OnlineExtractor::new(config)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "timestamp,probability,label")?;
    out.flush()?;
    let mut row = 0usize;
    for line in stdin.lock().lines() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if row == 0 && fields.contains(&"load_kw") {
            continue;
        }
        row += 1;
        let (ts, load) = match fields.as_slice() {
            [load] => (row.to_string(), *load),
            [ts, load, ..] => {
                if parse_timestamp(ts).is_none() {
                    return Err(format!("row {row}: bad timestamp {ts:?}").into());
                }
                (ts.to_string(), *load)
            }
            [] => unreachable!("split yields at least one field"),
        };
        let value: f64 = load.parse().map_err(|_| format!("row {row}: bad load value {load:?}"))?;
        let features = extractor.push(value).map_err(|e| format!("row {row}: {e}"))?;
        let p = model.predict_row(&features);
        writeln!(out, "{ts},{p},{}", u8::from(p > threshold))?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_evaluate(pred: &Path, truth: &Path, out: Option<&Path>) -> CliResult {
    let p = read_label_csv(pred).map_err(|e| format!("{}: {e}", pred.display()))?;
    let t = read_label_csv(truth).map_err(|e| format!("{}: {e}", truth.display()))?;
    align(&t, &p)?;
    let m = metrics(confusion(&t.labels, &p.labels)?);
    let c = m.counts;
    let text = format!(
        "precision={}\nrecall={}\nf1={}\naccuracy={}\ntp={}\nfp={}\nfn={}\ntn={}\n",
        MetricCell(m.precision),
        MetricCell(m.recall),
        MetricCell(m.f1),
        MetricCell(m.accuracy),
        c.tp,
        c.fp,
        c.fn_,
        c.tn
    );
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, text)?;
    }
    Ok(())
}

fn cmd_experiment(run: &RunArgs, features: FeatureConfig, out: &Path) -> CliResult {
    check_threshold(run.threshold)?;
    let (_, feeders) = load_benchmark(&run.data)?;
    let cfg = run.config(features)?;
    let result = run_experiment(&feeders, &cfg, Execution::default())?;
    write_experiment_artifacts(&result.manifest, out)?;
    serialize_model(&result.outcome.model, out.join("model.json"))?;
    print!("{}", format_metrics_report(&result.manifest));
    Ok(())
}

fn cmd_sweep(run: &RunArgs, lengths: &[usize], short_window: usize, out: &Path) -> CliResult {
    check_threshold(run.threshold)?;
    let (_, feeders) = load_benchmark(&run.data)?;
    let base = FeatureConfig { short_window, ..FeatureConfig::default() };
    let cfg = run.config(base)?;
    let report = window_length_sweep(&feeders, lengths, &cfg, Execution::default())?;
    fs::write(out, report.to_csv())?;
    print!("{}", report.to_table());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth { feeders, households, days, seed, out } => cmd_synth(feeders, households, days, seed, &out),
        Command::Featurize { input, mode, windows, out } => {
            cmd_featurize(&input, mode.into(), &windows.config()?, &out)
        }
        Command::Train { features, model, stride, out } => cmd_train(&features, &model, stride as usize, &out),
        Command::Detect { model, features, out, stream, windows, threshold } => {
            check_threshold(threshold)?;
            if stream {
                cmd_detect_stream(&model, windows.config()?, threshold)
            } else {
                let (features, out) = features.zip(out).expect("clap enforces --features and --out");
                cmd_detect_file(&model, &features, &out, threshold)
            }
        }
        Command::Evaluate { pred, truth, out } => cmd_evaluate(&pred, &truth, out.as_deref()),
        Command::Experiment { run, windows, out } => cmd_experiment(&run, windows.config()?, &out),
        Command::Sweep { run, lengths, short_window, out } => cmd_sweep(&run, &lengths, short_window as usize, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
