//! Gradient-boosted decision trees, gain-based feature selection and
//! classification metrics.

mod gbt;
pub mod loss;
mod metrics;
mod select;

pub use gbt::{feature_importance, predict_proba, train_gbt, GbtHyperparams, GbtModel, Node, Tree};
pub use metrics::{compute_metrics, predicted_class, MetricsReport, Task};
pub use select::{read_ranking_csv, select_top_k, write_ranking_csv, FeatureSelection, TopKClassifier};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("empty feature matrix")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("class {class:?} has {count} sample(s), need at least 2")]
    SmallClass { class: String, count: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyperparams(String),
    #[error("model expects {expected} features, got {found}")]
    FeatureCount { expected: usize, found: usize },
    #[error("k = {k} exceeds the {available} available features")]
    TooManyFeatures { k: usize, available: usize },
    #[error("ranking does not cover feature {0}")]
    BadRanking(usize),
    #[error("class index {class} out of range for {n_classes} classes")]
    ClassIndex { class: usize, n_classes: usize },
    #[error("class {0} is absent from y_true")]
    AbsentClass(usize),
    #[error("invalid probability row {0}")]
    BadProbabilities(usize),
    #[error("ranking CSV: {0}")]
    Csv(String),
}

/// A dense row-major matrix of finite feature values.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MlError> {
        if rows == 0 || cols == 0 {
            return Err(MlError::Empty);
        }
        if data.len() != rows * cols {
            return Err(MlError::Ragged {
                row: data.len() / cols,
                found: data.len() % cols,
                expected: cols,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(MlError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, MlError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MlError::Ragged {
                    row: i,
                    found: r.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, MlError> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.cols, data)
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self, MlError> {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(self.rows, cols.len(), data)
    }

    /// Multiplies one column by `factor` in place.
    pub fn scale_column(&mut self, col: usize, factor: f64) {
        for r in 0..self.rows {
            self.data[r * self.cols + col] *= factor;
        }
    }
}
