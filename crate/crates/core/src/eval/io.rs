//! Label and prediction files.
//!
//! Any CSV with a header works as a label source as long as it has a
//! `label` column; a `timestamp` column, when present on both sides, must
//! agree row by row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::series::{ChargingLabelSeries, SeriesError};

use super::EvalError;

pub const PREDICTION_HEADER: [&str; 3] = ["timestamp", "probability", "label"];

#[derive(Debug, Clone, PartialEq)]
pub struct LabelColumn {
    pub timestamps: Option<Vec<String>>,
    pub labels: ChargingLabelSeries,
}

pub fn read_label_csv(path: impl AsRef<Path>) -> Result<LabelColumn, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(|e| EvalError::Io(e.to_string()))?;
    let header: Vec<String> =
        reader.headers().map_err(|e| EvalError::Io(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| SeriesError::SchemaMismatch { expected: "a `label` column".into() })?;
    let ts_col = header.iter().position(|h| h == "timestamp");
    let mut labels = Vec::new();
    let mut timestamps = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| SeriesError::MalformedRow(row, e.to_string()))?;
        labels.push(match rec.get(label_col).map(str::trim) {
            Some("0") => 0,
            Some("1") => 1,
            _ => return Err(SeriesError::InvalidLabel(row).into()),
        });
        if let Some(c) = ts_col {
            timestamps.push(rec.get(c).unwrap_or_default().trim().to_string());
        }
    }
    Ok(LabelColumn { timestamps: ts_col.map(|_| timestamps), labels: ChargingLabelSeries::new(labels)? })
}

/// Checks that two label files describe the same time steps.
pub fn align(truth: &LabelColumn, predicted: &LabelColumn) -> Result<(), EvalError> {
    if truth.labels.len() != predicted.labels.len() {
        return Err(EvalError::LengthMismatch { truth: truth.labels.len(), predicted: predicted.labels.len() });
    }
    if let (Some(a), Some(b)) = (&truth.timestamps, &predicted.timestamps) {
        if let Some(i) = a.iter().zip(b).position(|(x, y)| x != y) {
            return Err(EvalError::InvalidConfig(format!("timestamps differ at row {}: {} vs {}", i + 1, a[i], b[i])));
        }
    }
    Ok(())
}

pub fn write_predictions_csv(
    path: impl AsRef<Path>,
    timestamps: &[String],
    probabilities: &[f64],
    decision_threshold: f64,
) -> Result<(), EvalError> {
    if timestamps.len() != probabilities.len() {
        return Err(EvalError::LengthMismatch { truth: timestamps.len(), predicted: probabilities.len() });
    }
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(w, "{}", PREDICTION_HEADER.join(","))?;
    for (t, &p) in timestamps.iter().zip(probabilities) {
        writeln!(w, "{t},{p},{}", u8::from(p > decision_threshold))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn predictions_read_back_as_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let ts: Vec<String> = (0..3).map(|i| format!("2024-01-01T00:0{i}:00Z")).collect();
        write_predictions_csv(&p, &ts, &[0.2, 0.7, 0.5], 0.5).unwrap();
        let col = read_label_csv(&p).unwrap();
        assert_eq!(col.labels.labels(), &[0, 1, 0]);
        assert_eq!(col.timestamps.as_deref(), Some(ts.as_slice()));
        assert!(align(&col, &col).is_ok());
    }

    #[test]
    fn misaligned_and_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        fs::write(&a, "timestamp,label\nx,1\ny,0\n").unwrap();
        fs::write(&b, "timestamp,label\nx,1\nz,0\n").unwrap();
        let (ca, cb) = (read_label_csv(&a).unwrap(), read_label_csv(&b).unwrap());
        assert!(matches!(align(&ca, &cb), Err(EvalError::InvalidConfig(_))));
        fs::write(&b, "label\n1\n").unwrap();
        let cb = read_label_csv(&b).unwrap();
        assert_eq!(align(&ca, &cb), Err(EvalError::LengthMismatch { truth: 2, predicted: 1 }));
        fs::write(&b, "label\n1\n2\n").unwrap();
        assert_eq!(read_label_csv(&b), Err(EvalError::Series(SeriesError::InvalidLabel(2))));
        fs::write(&b, "value\n1\n").unwrap();
        assert!(matches!(read_label_csv(&b), Err(EvalError::Series(SeriesError::SchemaMismatch { .. }))));
    }
}
