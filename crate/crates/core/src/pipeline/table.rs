use std::path::Path;
use std::str::FromStr;

use super::{PipelineError, Split};
use crate::mlkit::{compute_metrics, predicted_class, FeatureMatrix, MetricsReport, MlError, Task};

const META_COLUMNS: [&str; 3] = ["path", "label", "split"];
const PROB_PREFIX: &str = "p_";

/// Which rows of a table an operation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitFilter {
    All,
    Only(Split),
}

impl SplitFilter {
    pub fn accepts(self, split: Option<Split>) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Only(s) => split == Some(s),
        }
    }
}

impl FromStr for SplitFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(SplitFilter::All)
        } else {
            s.parse().map(SplitFilter::Only)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub label: String,
    pub split: Option<Split>,
    pub values: Vec<f64>,
}

/// A feature CSV: `path,label,split,f000,f001,...`. Label and split may be
/// empty for unlabeled rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> PipelineError + '_ {
    move |e| PipelineError::format(path, e.to_string())
}

fn split_field(s: Option<Split>) -> String {
    s.map(|s| s.to_string()).unwrap_or_default()
}

impl FeatureTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = META_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.feature_names.iter().cloned());
        w.write_record(header).expect("in-memory write");
        for r in &self.rows {
            let fields = [r.path.clone(), r.label.clone(), split_field(r.split)]
                .into_iter()
                .chain(r.values.iter().map(|v| v.to_string()));
            w.write_record(fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(PipelineError::io(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(PipelineError::io(path))?;
        Self::read(file, path)
    }

    /// Parses CSV from `input`; `origin` names it in errors.
    pub fn read(input: impl std::io::Read, origin: &Path) -> Result<Self, PipelineError> {
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers().map_err(csv_err(origin))?.clone();
        if header.len() <= 3 || header.iter().take(3).ne(META_COLUMNS) {
            return Err(PipelineError::format(
                origin,
                "header must start with path,label,split and name at least one feature",
            ));
        }
        let feature_names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err(origin))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |msg: String| PipelineError::format(origin, format!("line {line}: {msg}"));
            let split = match &rec[2] {
                "" => None,
                s => Some(s.parse().map_err(bad)?),
            };
            let values = rec
                .iter()
                .skip(3)
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| bad(format!("bad value {v:?}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(FeatureRow {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
                split,
                values,
            });
        }
        Ok(Self { feature_names, rows })
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    /// The matrix and rows accepted by `filter`, in table order.
    pub fn select(&self, filter: SplitFilter) -> Result<(FeatureMatrix, Vec<&FeatureRow>), MlError> {
        let rows: Vec<&FeatureRow> = self.rows.iter().filter(|r| filter.accepts(r.split)).collect();
        let values: Vec<&[f64]> = rows.iter().map(|r| r.values.as_slice()).collect();
        Ok((FeatureMatrix::from_rows(&values)?, rows))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub path: String,
    pub label: String,
    pub split: Option<Split>,
    pub predicted: String,
    pub probabilities: Vec<f64>,
}

/// A predictions CSV: `path,label,split,predicted,p_<class>...`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    pub classes: Vec<String>,
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    pub fn new(classes: &[String], rows: &[&FeatureRow], probabilities: Vec<Vec<f64>>) -> Self {
        let rows = rows
            .iter()
            .zip(probabilities)
            .map(|(r, p)| PredictionRow {
                path: r.path.clone(),
                label: r.label.clone(),
                split: r.split,
                predicted: classes[predicted_class(&p)].clone(),
                probabilities: p,
            })
            .collect();
        Self {
            classes: classes.to_vec(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = ["path", "label", "split", "predicted"]
            .into_iter()
            .map(str::to_string)
            .chain(self.classes.iter().map(|c| format!("{PROB_PREFIX}{c}")));
        w.write_record(header).expect("in-memory write");
        for r in &self.rows {
            let fields = [
                r.path.clone(),
                r.label.clone(),
                split_field(r.split),
                r.predicted.clone(),
            ]
            .into_iter()
            .chain(r.probabilities.iter().map(|p| p.to_string()));
            w.write_record(fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(PipelineError::io(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(PipelineError::io(path))?;
        let mut reader = csv::Reader::from_reader(file);
        let header = reader.headers().map_err(csv_err(path))?.clone();
        let fixed = ["path", "label", "split", "predicted"];
        if header.len() < 6 || header.iter().take(4).ne(fixed) {
            return Err(PipelineError::format(
                path,
                "header must be path,label,split,predicted,p_<class>... with at least two classes",
            ));
        }
        let classes = header
            .iter()
            .skip(4)
            .map(|h| h.strip_prefix(PROB_PREFIX).map(str::to_string))
            .collect::<Option<Vec<String>>>()
            .ok_or_else(|| {
                PipelineError::format(path, format!("probability columns must start with {PROB_PREFIX:?}"))
            })?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err(path))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |msg: String| PipelineError::format(path, format!("line {line}: {msg}"));
            let split = match &rec[2] {
                "" => None,
                s => Some(s.parse().map_err(bad)?),
            };
            let probabilities = rec
                .iter()
                .skip(4)
                .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad probability {v:?}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(PredictionRow {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
                split,
                predicted: rec[3].to_string(),
                probabilities,
            });
        }
        Ok(Self { classes, rows })
    }

    /// Binary tables score `positive` (default: the last class in sorted
    /// order); wider ones use macro averages.
    pub fn task(&self, positive: Option<&str>) -> Result<Task, PipelineError> {
        if self.classes.len() != 2 {
            return Ok(Task::Multiclass);
        }
        let positive = match positive {
            None => 1,
            Some(p) => self.classes.iter().position(|c| c == p).ok_or_else(|| {
                PipelineError::Config(format!("positive class {p:?} is not one of {:?}", self.classes))
            })?,
        };
        Ok(Task::Binary { positive })
    }
}

/// Recomputes metrics from a predictions table. Every row must carry a
/// known label.
pub fn metrics_from_predictions(
    table: &PredictionTable,
    positive: Option<&str>,
) -> Result<MetricsReport, PipelineError> {
    let mut truth = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let idx = table.classes.iter().position(|c| *c == r.label).ok_or_else(|| {
            PipelineError::Config(format!(
                "row {:?} has label {:?} outside {:?}",
                r.path, r.label, table.classes
            ))
        })?;
        truth.push(idx);
    }
    let probs: Vec<Vec<f64>> = table.rows.iter().map(|r| r.probabilities.clone()).collect();
    Ok(compute_metrics(&truth, &probs, table.task(positive)?)?)
}
