//! Seedable synthetic households and feeders.
//!
//! A household's load is a daily sinusoid plus clipped Gaussian noise,
//! appliance bursts and optional on/off cycling episodes, with optional
//! constant-power EV charging sessions on top. Feeders sum their households and OR their labels.
//!
//! Every household draws from its own ChaCha8 stream seeded with
//! [`derive_seed`]`(rng_seed, feeder_index, household_index)`, so output does
//! not depend on generation order or thread count.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};
pub use crate::seeding::{derive_seed, splitmix64};
use crate::series::{
    read_feeder_csv, write_feeder_csv, write_household_csv, ChargingLabelSeries, FeederRecordSet, HouseholdRecordSet,
    LoadSeries, SeriesError,
};

pub const MINUTES_PER_DAY: usize = 1440;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("household series differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("household series start at different timestamps")]
    TimestampMismatch,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("manifest: {0}")]
    Manifest(String),
}

fn default_start_hour_weights() -> Vec<f64> {
    vec![
        1.0, 0.5, 0.3, 0.2, 0.2, 0.3, 0.6, 1.0, 1.0, 1.0, 1.0, 1.0, //
        1.0, 1.2, 1.5, 2.0, 3.0, 5.0, 6.0, 6.0, 5.0, 4.0, 3.0, 2.0,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdProfileParams {
    pub base_load_mean: f64,
    pub base_load_daily_amplitude: f64,
    pub noise_std: f64,
    /// Expected appliance bursts per day.
    pub appliance_spike_rate: f64,
    pub appliance_spike_kw_range: (f64, f64),
    pub appliance_spike_minutes_range: (u32, u32),
    /// Expected on/off cycling episodes per day (air conditioning, heat pumps).
    pub cycling_episodes_per_day: f64,
    pub cycling_kw_range: (f64, f64),
    pub cycling_episode_minutes_range: (u32, u32),
    pub cycling_on_minutes_range: (u32, u32),
    pub cycling_off_minutes_range: (u32, u32),
    pub ev_present: bool,
    pub ev_power_range: (f64, f64),
    pub ev_sessions_per_day_mean: f64,
    pub ev_duration_minutes_range: (u32, u32),
    /// Relative weight of each start hour, 24 entries.
    pub ev_start_hour_weights: Vec<f64>,
}

impl Default for HouseholdProfileParams {
    fn default() -> Self {
        Self {
            base_load_mean: 0.6,
            base_load_daily_amplitude: 0.35,
            noise_std: 0.05,
            appliance_spike_rate: 8.0,
            appliance_spike_kw_range: (0.5, 2.5),
            appliance_spike_minutes_range: (2, 30),
            cycling_episodes_per_day: 0.0,
            cycling_kw_range: (2.0, 4.0),
            cycling_episode_minutes_range: (60, 360),
            cycling_on_minutes_range: (5, 20),
            cycling_off_minutes_range: (5, 20),
            ev_present: true,
            ev_power_range: (3.3, 7.2),
            ev_sessions_per_day_mean: 0.5,
            ev_duration_minutes_range: (60, 360),
            ev_start_hour_weights: default_start_hour_weights(),
        }
    }
}

impl HouseholdProfileParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
        let non_neg = |x: f64| x.is_finite() && x >= 0.0;
        if ![
            self.base_load_mean,
            self.base_load_daily_amplitude,
            self.noise_std,
            self.appliance_spike_rate,
            self.cycling_episodes_per_day,
            self.ev_sessions_per_day_mean,
        ]
        .into_iter()
        .all(non_neg)
        {
            return bad("magnitudes and rates must be finite and non-negative");
        }
        for (name, (lo, hi)) in [
            ("appliance_spike_kw_range", self.appliance_spike_kw_range),
            ("cycling_kw_range", self.cycling_kw_range),
            ("ev_power_range", self.ev_power_range),
        ] {
            if !(non_neg(lo) && non_neg(hi) && lo <= hi) {
                return bad(&format!("{name} must be ordered and non-negative"));
            }
        }
        for (name, (lo, hi)) in [
            ("appliance_spike_minutes_range", self.appliance_spike_minutes_range),
            ("cycling_episode_minutes_range", self.cycling_episode_minutes_range),
            ("cycling_on_minutes_range", self.cycling_on_minutes_range),
            ("cycling_off_minutes_range", self.cycling_off_minutes_range),
            ("ev_duration_minutes_range", self.ev_duration_minutes_range),
        ] {
            if lo > hi || lo == 0 {
                return bad(&format!("{name} must be ordered and at least one minute"));
            }
        }
        if self.ev_start_hour_weights.len() != 24
            || !self.ev_start_hour_weights.iter().all(|&w| non_neg(w))
            || self.ev_start_hour_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("ev_start_hour_weights needs 24 non-negative weights with a positive sum");
        }
        Ok(())
    }
}

/// One EV session as drawn, before overlapping sessions are merged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub start_minute: usize,
    pub duration_minutes: u32,
    pub power_kw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedHousehold {
    pub record: HouseholdRecordSet,
    pub sessions: Vec<EvSession>,
    pub seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn uniform_minutes(rng: &mut ChaCha8Rng, (lo, hi): (u32, u32)) -> u32 {
    rng.random_range(lo..=hi)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

pub fn default_start() -> DateTime<Utc> {
    "2018-01-01T00:00:00Z".parse().expect("valid literal")
}

pub fn generate_household(
    id: impl Into<String>,
    params: &HouseholdProfileParams,
    days: usize,
    seed: u64,
) -> Result<GeneratedHousehold, SynthError> {
    generate_household_at(id, params, days, seed, default_start())
}

pub fn generate_household_at(
    id: impl Into<String>,
    params: &HouseholdProfileParams,
    days: usize,
    seed: u64,
    start: DateTime<Utc>,
) -> Result<GeneratedHousehold, SynthError> {
    params.validate()?;
    if days == 0 {
        return Err(SynthError::InvalidParams("days must be at least 1".into()));
    }
    let len = days * MINUTES_PER_DAY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Base load: daily sinusoid peaking in the evening, phase jittered per household.
    let phase_hours: f64 = rng.random_range(-2.0..=2.0);
    let noise = Normal::new(0.0, params.noise_std).map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let mut base: Vec<f64> = (0..len)
        .map(|m| {
            let hour = (m % MINUTES_PER_DAY) as f64 / 60.0;
            let shape = (TAU * (hour - 13.0 - phase_hours) / 24.0).sin();
            (params.base_load_mean + params.base_load_daily_amplitude * shape + noise.sample(&mut rng)).max(0.0)
        })
        .collect();

    for day in 0..days {
        for _ in 0..poisson(&mut rng, params.appliance_spike_rate) {
            let start = day * MINUTES_PER_DAY + rng.random_range(0..MINUTES_PER_DAY);
            let minutes = uniform_minutes(&mut rng, params.appliance_spike_minutes_range) as usize;
            let kw = uniform(&mut rng, params.appliance_spike_kw_range);
            for v in base.iter_mut().skip(start).take(minutes) {
                *v += kw;
            }
        }
    }

    for day in 0..days {
        for _ in 0..poisson(&mut rng, params.cycling_episodes_per_day) {
            let start = day * MINUTES_PER_DAY + rng.random_range(0..MINUTES_PER_DAY);
            let end = (start + uniform_minutes(&mut rng, params.cycling_episode_minutes_range) as usize).min(len);
            let kw = uniform(&mut rng, params.cycling_kw_range);
            let mut m = start;
            while m < end {
                let on = uniform_minutes(&mut rng, params.cycling_on_minutes_range) as usize;
                for v in &mut base[m..(m + on).min(end)] {
                    *v += kw;
                }
                m += on + uniform_minutes(&mut rng, params.cycling_off_minutes_range) as usize;
            }
        }
    }

    let mut sessions = Vec::new();
    if params.ev_present {
        let hours =
            WeightedIndex::new(&params.ev_start_hour_weights).map_err(|e| SynthError::InvalidParams(e.to_string()))?;
        for day in 0..days {
            for _ in 0..poisson(&mut rng, params.ev_sessions_per_day_mean) {
                let hour = hours.sample(&mut rng);
                let start_minute = day * MINUTES_PER_DAY + hour * 60 + rng.random_range(0..60);
                let duration_minutes = uniform_minutes(&mut rng, params.ev_duration_minutes_range);
                let power_kw = uniform(&mut rng, params.ev_power_range);
                sessions.push(EvSession { start_minute, duration_minutes, power_kw });
            }
        }
    }
    let ev = render_sessions(&sessions, len);
    let load: Vec<f64> = base.iter().zip(&ev).map(|(b, e)| b + e).collect();

    let interval = Duration::seconds(60);
    let record =
        HouseholdRecordSet::new(id, LoadSeries::new(start, interval, load)?, LoadSeries::new(start, interval, ev)?)?;
    Ok(GeneratedHousehold { record, sessions, seed })
}

/// Charging power per minute. Overlapping sessions merge into one that keeps
/// the power of whichever started first.
fn render_sessions(sessions: &[EvSession], len: usize) -> Vec<f64> {
    let mut ordered: Vec<&EvSession> = sessions.iter().collect();
    ordered.sort_by_key(|s| s.start_minute);
    let mut ev = vec![0.0; len];
    let mut merged: Option<(usize, usize, f64)> = None;
    let flush = |m: (usize, usize, f64), ev: &mut Vec<f64>| {
        let (s, e, p) = m;
        for v in ev.iter_mut().take(e.min(len)).skip(s) {
            *v = p;
        }
    };
    for s in ordered {
        let end = s.start_minute + s.duration_minutes as usize;
        merged = match merged {
            Some((ms, me, mp)) if s.start_minute <= me => Some((ms, me.max(end), mp)),
            Some(m) => {
                flush(m, &mut ev);
                Some((s.start_minute, end, s.power_kw))
            }
            None => Some((s.start_minute, end, s.power_kw)),
        };
    }
    if let Some(m) = merged {
        flush(m, &mut ev);
    }
    ev
}

/// Sums household loads and ORs their labels.
pub fn aggregate_feeder(
    households: &[HouseholdRecordSet],
    feeder_id: impl Into<String>,
) -> Result<FeederRecordSet, SynthError> {
    let first =
        households.first().ok_or_else(|| SynthError::InvalidParams("a feeder needs at least one household".into()))?;
    let len = first.load.len();
    for h in households {
        if h.load.len() != len {
            return Err(SynthError::LengthMismatch { left: len, right: h.load.len() });
        }
        if h.load.start() != first.load.start() || h.load.interval() != first.load.interval() {
            return Err(SynthError::TimestampMismatch);
        }
    }
    let mut load = vec![0.0; len];
    let mut on = vec![false; len];
    for h in households {
        for (acc, v) in load.iter_mut().zip(h.load.values()) {
            *acc += v;
        }
        for (acc, &l) in on.iter_mut().zip(h.labels.labels()) {
            *acc |= l == 1;
        }
    }
    Ok(FeederRecordSet::new(
        feeder_id,
        households.iter().map(|h| h.household_id.clone()).collect(),
        LoadSeries::new(first.load.start(), first.load.interval(), load)?,
        ChargingLabelSeries::from_bools(on),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HouseholdParams {
    Shared(HouseholdProfileParams),
    /// One entry per household slot in a feeder.
    PerHousehold(Vec<HouseholdProfileParams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederSynthConfig {
    pub num_feeders: usize,
    pub households_per_feeder: usize,
    pub days: usize,
    pub rng_seed: u64,
    pub household_params: HouseholdParams,
}

impl Default for FeederSynthConfig {
    fn default() -> Self {
        Self {
            num_feeders: 22,
            households_per_feeder: 3,
            days: 30,
            rng_seed: 7,
            household_params: HouseholdParams::Shared(HouseholdProfileParams::default()),
        }
    }
}

impl FeederSynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.num_feeders == 0 {
            return Err(SynthError::InvalidParams("num_feeders must be at least 1".into()));
        }
        if self.households_per_feeder == 0 {
            return Err(SynthError::InvalidParams("households_per_feeder must be at least 1".into()));
        }
        if self.days == 0 {
            return Err(SynthError::InvalidParams("days must be at least 1".into()));
        }
        match &self.household_params {
            HouseholdParams::Shared(p) => p.validate(),
            HouseholdParams::PerHousehold(ps) => {
                if ps.len() != self.households_per_feeder {
                    return Err(SynthError::InvalidParams(format!(
                        "expected {} household parameter sets, found {}",
                        self.households_per_feeder,
                        ps.len()
                    )));
                }
                ps.iter().try_for_each(HouseholdProfileParams::validate)
            }
        }
    }

    fn params_for(&self, household: usize) -> &HouseholdProfileParams {
        match &self.household_params {
            HouseholdParams::Shared(p) => p,
            HouseholdParams::PerHousehold(ps) => &ps[household],
        }
    }
}

pub fn feeder_id(index: usize) -> String {
    format!("feeder_{index:02}")
}

pub fn household_id(feeder: usize, household: usize) -> String {
    format!("feeder_{feeder:02}_house_{household}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdManifest {
    pub household_id: String,
    pub seed: u64,
    pub file: String,
    pub ev_present: bool,
    pub ev_sessions: usize,
    pub charging_minutes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederManifest {
    pub feeder_id: String,
    pub file: String,
    pub samples: usize,
    pub positive_samples: usize,
    pub households: Vec<HouseholdManifest>,
}

/// Record of how a benchmark was generated; written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub manifest_version: u32,
    pub seed_derivation: String,
    pub start_timestamp: String,
    pub interval_seconds: i64,
    pub config: FeederSynthConfig,
    pub feeders: Vec<FeederManifest>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub feeders: Vec<FeederRecordSet>,
    pub households: Vec<Vec<GeneratedHousehold>>,
    pub manifest: BenchmarkManifest,
}

pub fn generate_benchmark(config: &FeederSynthConfig) -> Result<Benchmark, SynthError> {
    generate_benchmark_with(config, Execution::default())
}

pub fn generate_benchmark_with(config: &FeederSynthConfig, exec: Execution) -> Result<Benchmark, SynthError> {
    config.validate()?;
    let built = par::map_range(exec, config.num_feeders, |f| -> Result<_, SynthError> {
        let households = (0..config.households_per_feeder)
            .map(|h| {
                let seed = derive_seed(config.rng_seed, f as u64, h as u64);
                generate_household(household_id(f, h), config.params_for(h), config.days, seed)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let records: Vec<HouseholdRecordSet> = households.iter().map(|g| g.record.clone()).collect();
        let feeder = aggregate_feeder(&records, feeder_id(f))?;
        Ok((feeder, households))
    });
    let mut feeders = Vec::with_capacity(config.num_feeders);
    let mut households = Vec::with_capacity(config.num_feeders);
    for r in built {
        let (f, h) = r?;
        feeders.push(f);
        households.push(h);
    }
    let manifest = BenchmarkManifest {
        manifest_version: MANIFEST_VERSION,
        seed_derivation: "splitmix64(splitmix64(splitmix64(rng_seed) ^ feeder_index) ^ household_index)".into(),
        start_timestamp: crate::series::format_timestamp(default_start()),
        interval_seconds: 60,
        config: config.clone(),
        feeders: feeders
            .iter()
            .zip(&households)
            .map(|(f, hs)| FeederManifest {
                feeder_id: f.feeder_id.clone(),
                file: format!("{}.csv", f.feeder_id),
                samples: f.load.len(),
                positive_samples: f.labels.positives(),
                households: hs
                    .iter()
                    .enumerate()
                    .map(|(h, g)| HouseholdManifest {
                        household_id: g.record.household_id.clone(),
                        seed: g.seed,
                        file: format!("households/{}.csv", g.record.household_id),
                        ev_present: config.params_for(h).ev_present,
                        ev_sessions: g.sessions.len(),
                        charging_minutes: g.record.labels.positives(),
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(Benchmark { feeders, households, manifest })
}

/// Writes feeder CSVs, household CSVs (under `households/`) and the manifest.
pub fn write_benchmark(bench: &Benchmark, dir: impl AsRef<Path>) -> Result<(), SynthError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("households")).map_err(SeriesError::from)?;
    for (feeder, fm) in bench.feeders.iter().zip(&bench.manifest.feeders) {
        write_feeder_csv(feeder, dir.join(&fm.file))?;
    }
    for (hs, fm) in bench.households.iter().zip(&bench.manifest.feeders) {
        for (h, hm) in hs.iter().zip(&fm.households) {
            write_household_csv(&h.record, dir.join(&hm.file))?;
        }
    }
    let json = serde_json::to_string_pretty(&bench.manifest).map_err(|e| SynthError::Manifest(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n").map_err(SeriesError::from)?;
    Ok(())
}

/// Reads the manifest and every feeder it lists.
pub fn load_benchmark(dir: impl AsRef<Path>) -> Result<(BenchmarkManifest, Vec<FeederRecordSet>), SynthError> {
    let dir = dir.as_ref();
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(SeriesError::from)?;
    let manifest: BenchmarkManifest = serde_json::from_str(&text).map_err(|e| SynthError::Manifest(e.to_string()))?;
    let feeders = manifest
        .feeders
        .iter()
        .map(|fm| {
            let mut f = read_feeder_csv(dir.join(&fm.file))?;
            f.feeder_id = fm.feeder_id.clone();
            f.household_ids = fm.households.iter().map(|h| h.household_id.clone()).collect();
            Ok(f)
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    Ok((manifest, feeders))
}
