//! Feature CSV: `timestamp,<feature columns...>[,label]`, one row per time
//! step, values in shortest round-trip decimal form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::FeatureMatrix;
use crate::series::{format_timestamp, ChargingLabelSeries, LoadSeries, SeriesError};

/// A feature file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub timestamps: Vec<String>,
    pub features: FeatureMatrix,
    pub labels: Option<ChargingLabelSeries>,
}

pub fn write_feature_csv(
    path: impl AsRef<Path>,
    load: &LoadSeries,
    features: &FeatureMatrix,
    labels: Option<&ChargingLabelSeries>,
) -> Result<(), SeriesError> {
    if features.n_rows() != load.len() {
        return Err(SeriesError::LengthMismatch { left: features.n_rows(), right: load.len() });
    }
    if let Some(l) = labels {
        if l.len() != load.len() {
            return Err(SeriesError::LengthMismatch { left: l.len(), right: load.len() });
        }
    }
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    write!(w, "timestamp")?;
    for c in features.column_names() {
        write!(w, ",{c}")?;
    }
    if labels.is_some() {
        write!(w, ",label")?;
    }
    writeln!(w)?;
    for (t, row) in features.rows().enumerate() {
        write!(w, "{}", format_timestamp(load.timestamp(t)))?;
        for v in row {
            write!(w, ",{v}")?;
        }
        if let Some(l) = labels {
            write!(w, ",{}", l.labels()[t])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<FeatureTable, SeriesError> {
    let file = File::open(path.as_ref())?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| SeriesError::IoFailure(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 2 || header[0] != "timestamp" {
        return Err(SeriesError::SchemaMismatch { expected: "timestamp,<features...>[,label]".into() });
    }
    let has_label = header.last().map(String::as_str) == Some("label");
    let feature_end = if has_label { header.len() - 1 } else { header.len() };
    let columns = header[1..feature_end].to_vec();
    if columns.is_empty() {
        return Err(SeriesError::SchemaMismatch { expected: "at least one feature column".into() });
    }

    let mut timestamps = Vec::new();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SeriesError::MalformedRow(row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(SeriesError::MalformedRow(
                row,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        timestamps.push(record[0].to_string());
        for (c, field) in record.iter().enumerate().take(feature_end).skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| SeriesError::MalformedRow(row, format!("column `{}` is not a number", header[c])))?;
            if !v.is_finite() {
                return Err(SeriesError::MalformedRow(row, format!("column `{}` is not finite", header[c])));
            }
            data.push(v);
        }
        if has_label {
            labels.push(match record[feature_end].trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(SeriesError::MalformedRow(row, format!("label must be 0 or 1, found {other:?}"))),
            });
        }
    }
    if timestamps.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    let mode =
        [super::FeatureMode::Offline, super::FeatureMode::Online].into_iter().find(|m| m.width() == columns.len());
    let features = FeatureMatrix::new(mode, columns, data).map_err(|e| SeriesError::IoFailure(e.to_string()))?;
    let labels = if has_label { Some(ChargingLabelSeries::new(labels)?) } else { None };
    Ok(FeatureTable { timestamps, features, labels })
}
