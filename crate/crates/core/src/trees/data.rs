use crate::features::FeatureMatrix;
use crate::series::ChargingLabelSeries;

use super::ModelError;

/// Column-major copy of a feature matrix with every column presorted.
/// Build once and reuse across trees and boosting rounds.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    schema: Vec<String>,
    columns: Vec<Vec<f64>>,
    // row indices ascending by value, ties by row index
    order: Vec<Vec<u32>>,
    labels: Vec<u8>,
}

impl TrainingSet {
    pub fn new(features: &FeatureMatrix, labels: &ChargingLabelSeries) -> Result<Self, ModelError> {
        let n = features.n_rows();
        if n != labels.len() {
            return Err(ModelError::ShapeMismatch { rows: n, labels: labels.len() });
        }
        if n < 2 {
            return Err(ModelError::TooFewRows(n));
        }
        if n > u32::MAX as usize {
            return Err(ModelError::InvalidParams(format!("{n} rows exceed the supported maximum")));
        }
        if let Some((row, &value)) = labels.labels().iter().enumerate().find(|(_, &y)| y > 1) {
            return Err(ModelError::NonBinaryLabels { row, value });
        }
        let d = features.n_cols();
        let mut columns = vec![Vec::with_capacity(n); d];
        for row in features.rows() {
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        }
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Ok(Self { schema: features.column_names().to_vec(), columns, order, labels: labels.labels().to_vec() })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub(crate) fn column(&self, f: usize) -> &[f64] {
        &self.columns[f]
    }

    pub(crate) fn order(&self, f: usize) -> &[u32] {
        &self.order[f]
    }

    /// Every row identical while both classes are present.
    pub fn is_degenerate(&self) -> bool {
        let p = self.positives();
        let mixed = p > 0 && p < self.n_rows();
        let constant = self
            .order
            .iter()
            .zip(&self.columns)
            .all(|(o, c)| c[o[0] as usize] == c[*o.last().expect("n >= 2") as usize]);
        mixed && constant
    }
}
