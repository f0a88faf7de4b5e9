//! Load and label series, household/feeder record sets, and their CSV forms.
//!
//! Household CSV: `timestamp,load_kw,ev_kw`. Feeder CSV: `timestamp,load_kw,label`.
//! Timestamps are ISO-8601 UTC (`2018-01-01T00:00:00Z`), one row per sample,
//! spaced exactly one interval apart. Row numbers in errors count data rows
//! from 1 (the header is not counted).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use thiserror::Error;

/// Sampling interval used when none is given.
pub const DEFAULT_INTERVAL_SECS: i64 = 60;

pub const HOUSEHOLD_HEADER: [&str; 3] = ["timestamp", "load_kw", "ev_kw"];
pub const FEEDER_HEADER: [&str; 3] = ["timestamp", "load_kw", "label"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is empty")]
    EmptySeries,
    #[error("negative value at index {0}")]
    NegativeValue(usize),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("sampling interval must be positive")]
    InvalidInterval,
    #[error("label at index {0} is not 0 or 1")]
    InvalidLabel(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("EV load exceeds total load at index {0}")]
    EvExceedsLoad(usize),
    #[error("malformed row {0}: {1}")]
    MalformedRow(usize, String),
    #[error("non-uniform timestamps at row {0}")]
    NonUniformTimestamps(usize),
    #[error("header does not match schema (expected `{expected}`)")]
    SchemaMismatch { expected: String },
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl From<std::io::Error> for SeriesError {
    fn from(e: std::io::Error) -> Self {
        SeriesError::IoFailure(e.to_string())
    }
}

/// Checks the value invariants of a load series: non-empty, finite, non-negative.
/// Reports the first violation.
pub fn validate_load_values(values: &[f64]) -> Result<(), SeriesError> {
    if values.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(SeriesError::NonFiniteValue(i));
        }
        if v < 0.0 {
            return Err(SeriesError::NegativeValue(i));
        }
    }
    Ok(())
}

/// Uniformly sampled power series in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    start: DateTime<Utc>,
    interval: Duration,
    values: Vec<f64>,
}

impl LoadSeries {
    pub fn new(start: DateTime<Utc>, interval: Duration, values: Vec<f64>) -> Result<Self, SeriesError> {
        if interval <= Duration::zero() {
            return Err(SeriesError::InvalidInterval);
        }
        validate_load_values(&values)?;
        Ok(Self { start, interval, values })
    }

    /// Minute-interval series starting at the Unix epoch.
    pub fn from_values(values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(DateTime::UNIX_EPOCH, Duration::seconds(DEFAULT_INTERVAL_SECS), values)
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + self.interval * index as i32
    }
}

/// Re-checks every invariant of an existing series.
pub fn validate_load_series(series: &LoadSeries) -> Result<(), SeriesError> {
    if series.interval <= Duration::zero() {
        return Err(SeriesError::InvalidInterval);
    }
    validate_load_values(&series.values)
}

/// Binary EV charging state per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChargingLabelSeries {
    labels: Vec<u8>,
}

impl ChargingLabelSeries {
    pub fn new(labels: Vec<u8>) -> Result<Self, SeriesError> {
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(SeriesError::InvalidLabel(i));
        }
        Ok(Self { labels })
    }

    pub fn from_bools(flags: impl IntoIterator<Item = bool>) -> Self {
        Self { labels: flags.into_iter().map(u8::from).collect() }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdRecordSet {
    pub household_id: String,
    pub load: LoadSeries,
    pub ev_load: LoadSeries,
    pub labels: ChargingLabelSeries,
}

impl HouseholdRecordSet {
    /// Builds a household, deriving labels as `ev_kw > 0`.
    pub fn new(household_id: impl Into<String>, load: LoadSeries, ev_load: LoadSeries) -> Result<Self, SeriesError> {
        if load.len() != ev_load.len() {
            return Err(SeriesError::LengthMismatch { left: load.len(), right: ev_load.len() });
        }
        if let Some(i) = load.values().iter().zip(ev_load.values()).position(|(l, e)| e > l) {
            return Err(SeriesError::EvExceedsLoad(i));
        }
        let labels = ChargingLabelSeries::from_bools(ev_load.values().iter().map(|&e| e > 0.0));
        Ok(Self { household_id: household_id.into(), load, ev_load, labels })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederRecordSet {
    pub feeder_id: String,
    pub household_ids: Vec<String>,
    pub load: LoadSeries,
    pub labels: ChargingLabelSeries,
}

impl FeederRecordSet {
    pub fn new(
        feeder_id: impl Into<String>,
        household_ids: Vec<String>,
        load: LoadSeries,
        labels: ChargingLabelSeries,
    ) -> Result<Self, SeriesError> {
        if load.len() != labels.len() {
            return Err(SeriesError::LengthMismatch { left: load.len(), right: labels.len() });
        }
        Ok(Self { feeder_id: feeder_id.into(), household_ids, load, labels })
    }
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text.trim()).ok().map(|t| t.with_timezone(&Utc))
}

fn parse_kw(text: &str, row: usize, column: &str) -> Result<f64, SeriesError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| SeriesError::MalformedRow(row, format!("`{column}` is not a number: {text:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(SeriesError::MalformedRow(row, format!("`{column}` must be finite and non-negative")));
    }
    Ok(v)
}

fn open_reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>, SeriesError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header = reader.headers().map_err(|e| SeriesError::IoFailure(e.to_string()))?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(SeriesError::SchemaMismatch { expected: expected.join(",") });
    }
    Ok(reader)
}

/// Reads rows of `(timestamp, a, b)` checking uniform spacing.
fn read_rows<T>(
    path: &Path,
    header: &[&str],
    interval: Duration,
    mut parse: impl FnMut(&csv::StringRecord, usize) -> Result<T, SeriesError>,
) -> Result<(DateTime<Utc>, Vec<T>), SeriesError> {
    let mut reader = open_reader(path, header)?;
    let mut start = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SeriesError::MalformedRow(row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(SeriesError::MalformedRow(
                row,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| SeriesError::MalformedRow(row, format!("bad timestamp {:?}", &record[0])))?;
        if let Some(p) = prev {
            if ts - p != interval {
                return Err(SeriesError::NonUniformTimestamps(row));
            }
        } else {
            start = Some(ts);
        }
        prev = Some(ts);
        out.push(parse(&record, row)?);
    }
    let start = start.ok_or(SeriesError::EmptySeries)?;
    Ok((start, out))
}

pub fn read_household_csv(path: impl AsRef<Path>) -> Result<HouseholdRecordSet, SeriesError> {
    read_household_csv_with_interval(path, Duration::seconds(DEFAULT_INTERVAL_SECS))
}

/// Reads a household file. Any label column in the source data is ignored:
/// labels are always recomputed from `ev_kw`.
pub fn read_household_csv_with_interval(
    path: impl AsRef<Path>,
    interval: Duration,
) -> Result<HouseholdRecordSet, SeriesError> {
    let path = path.as_ref();
    if interval <= Duration::zero() {
        return Err(SeriesError::InvalidInterval);
    }
    let (start, rows) = read_rows(path, &HOUSEHOLD_HEADER, interval, |rec, row| {
        let load = parse_kw(&rec[1], row, "load_kw")?;
        let ev = parse_kw(&rec[2], row, "ev_kw")?;
        if ev > load {
            return Err(SeriesError::MalformedRow(row, "ev_kw exceeds load_kw".into()));
        }
        Ok((load, ev))
    })?;
    let (load, ev): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let id = file_stem(path);
    HouseholdRecordSet::new(id, LoadSeries::new(start, interval, load)?, LoadSeries::new(start, interval, ev)?)
}

/// Reads a feeder file. The feeder id is the file stem; household ids are not
/// part of the format and come back empty.
pub fn read_feeder_csv(path: impl AsRef<Path>) -> Result<FeederRecordSet, SeriesError> {
    read_feeder_csv_with_interval(path, Duration::seconds(DEFAULT_INTERVAL_SECS))
}

pub fn read_feeder_csv_with_interval(
    path: impl AsRef<Path>,
    interval: Duration,
) -> Result<FeederRecordSet, SeriesError> {
    let path = path.as_ref();
    if interval <= Duration::zero() {
        return Err(SeriesError::InvalidInterval);
    }
    let (start, rows) = read_rows(path, &FEEDER_HEADER, interval, |rec, row| {
        let load = parse_kw(&rec[1], row, "load_kw")?;
        let label = match rec[2].trim() {
            "0" => 0u8,
            "1" => 1u8,
            other => return Err(SeriesError::MalformedRow(row, format!("label must be 0 or 1, found {other:?}"))),
        };
        Ok((load, label))
    })?;
    let (load, labels): (Vec<f64>, Vec<u8>) = rows.into_iter().unzip();
    FeederRecordSet::new(
        file_stem(path),
        Vec::new(),
        LoadSeries::new(start, interval, load)?,
        ChargingLabelSeries::new(labels)?,
    )
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create_writer(path: &Path) -> Result<BufWriter<File>, SeriesError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_feeder_csv(feeder: &FeederRecordSet, path: impl AsRef<Path>) -> Result<(), SeriesError> {
    let mut w = create_writer(path.as_ref())?;
    writeln!(w, "{}", FEEDER_HEADER.join(","))?;
    for (i, (v, l)) in feeder.load.values().iter().zip(feeder.labels.labels()).enumerate() {
        writeln!(w, "{},{},{}", format_timestamp(feeder.load.timestamp(i)), v, l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_household_csv(household: &HouseholdRecordSet, path: impl AsRef<Path>) -> Result<(), SeriesError> {
    let mut w = create_writer(path.as_ref())?;
    writeln!(w, "{}", HOUSEHOLD_HEADER.join(","))?;
    for (i, (v, e)) in household.load.values().iter().zip(household.ev_load.values()).enumerate() {
        writeln!(w, "{},{},{}", format_timestamp(household.load.timestamp(i)), v, e)?;
    }
    w.flush()?;
    Ok(())
}
