use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    extract_dataset, metrics_from_predictions, DatasetManifest, ExtractOptions, FeatureTable, PipelineError,
    PredictionTable, Split, SplitFilter,
};
use crate::mlkit::{
    feature_importance, train_gbt, write_ranking_csv, GbtHyperparams, MetricsReport, Task, TopKClassifier,
};

pub const DEFAULT_FEATURE_COUNTS: [usize; 4] = [50, 100, 200, 400];

fn default_counts() -> Vec<usize> {
    DEFAULT_FEATURE_COUNTS.to_vec()
}

/// A feature-count sweep. Exactly one of `manifest` and `features` must
/// be set; relative paths are resolved against the config file's
/// directory by [`ExperimentConfig::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default = "default_counts")]
    pub feature_counts: Vec<usize>,
    #[serde(default)]
    pub hyperparams: GbtHyperparams,
    /// Overrides `hyperparams.seed`.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub superlevel: bool,
    /// Binary tasks only; defaults to the last class in sorted order.
    #[serde(default)]
    pub positive_class: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| PipelineError::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.manifest.as_mut().map(fix);
        cfg.features.as_mut().map(fix);
        fix(&mut cfg.output_dir);
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.manifest.is_some() == self.features.is_some() {
            return Err(PipelineError::Config(
                "set exactly one of \"manifest\" and \"features\"".into(),
            ));
        }
        if self.feature_counts.is_empty() || self.feature_counts.contains(&0) {
            return Err(PipelineError::Config(
                "feature_counts must be a non-empty list of positive counts".into(),
            ));
        }
        self.hyperparams.validate()?;
        Ok(())
    }
}

/// One feature count's results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub features: usize,
    /// The headline metrics, in the order of [`ExperimentReport::columns`].
    pub values: Vec<f64>,
    pub metrics: MetricsReport,
    /// File names inside the output directory.
    pub predictions: String,
    pub model: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: String,
    pub classes: Vec<String>,
    pub positive_class: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features_total: usize,
    pub ranking: String,
    /// Manifest entries that could not be vectorized.
    pub failed_images: Vec<String>,
    /// `balanced_accuracy, accuracy, auc` for multiclass tasks,
    /// `accuracy, sensitivity, specificity` for binary ones.
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// A Markdown table, one row per feature count, values in percent.
    pub fn render_table(&self) -> String {
        let mut s = String::from("| Features |");
        for c in &self.columns {
            let _ = write!(s, " {c} |");
        }
        s.push_str("\n|---:|");
        s.push_str(&"---:|".repeat(self.columns.len()));
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "| {} |", r.features);
            for v in &r.values {
                let _ = write!(s, " {:.2} |", v * 100.0);
            }
            s.push('\n');
        }
        s
    }
}

fn headline(task: Task, m: &MetricsReport) -> (Vec<&'static str>, Vec<f64>) {
    match task {
        Task::Binary { .. } => (
            vec!["accuracy", "sensitivity", "specificity"],
            vec![m.accuracy, m.sensitivity, m.specificity],
        ),
        Task::Multiclass => (
            vec!["balanced_accuracy", "accuracy", "auc"],
            vec![m.balanced_accuracy, m.accuracy, m.auc],
        ),
    }
}

/// Ranks features on the training split, then for every feature count
/// trains on the top-k columns, predicts the test split and scores the
/// written predictions file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(PipelineError::io(out))?;

    let (table, failed_images) = match (&cfg.manifest, &cfg.features) {
        (Some(manifest), _) => {
            let manifest = DatasetManifest::load(manifest)?;
            manifest.validate_for_experiment()?;
            let opts = ExtractOptions {
                workers: cfg.workers,
                superlevel: cfg.superlevel,
            };
            let extraction = extract_dataset(&manifest, &opts)?;
            extraction.table.save(out.join("features.csv"))?;
            extraction.save_log(out.join("extraction_log.csv"))?;
            let failed = extraction.failures().map(|l| l.path.clone()).collect();
            (extraction.table, failed)
        }
        (None, Some(features)) => (FeatureTable::load(features)?, Vec::new()),
        (None, None) => unreachable!("validated"),
    };

    let width = table.width();
    if let Some(&k) = cfg.feature_counts.iter().find(|&&k| k > width) {
        return Err(PipelineError::Config(format!(
            "feature count {k} exceeds the {width} available features"
        )));
    }
    let (train_x, train_rows) = table
        .select(SplitFilter::Only(Split::Train))
        .map_err(|_| PipelineError::Split("no training rows".into()))?;
    let (test_x, test_rows) = table
        .select(SplitFilter::Only(Split::Test))
        .map_err(|_| PipelineError::Split("no test rows".into()))?;
    let train_labels: Vec<&str> = train_rows.iter().map(|r| r.label.as_str()).collect();

    let hp = GbtHyperparams {
        seed: cfg.seed,
        ..cfg.hyperparams.clone()
    };
    let full = train_gbt(&train_x, &train_labels, &hp)?;
    let classes = full.classes.clone();
    if let Some(r) = test_rows.iter().find(|r| !classes.contains(&r.label)) {
        return Err(PipelineError::Split(format!(
            "test label {:?} ({}) does not occur in the training split",
            r.label, r.path
        )));
    }
    let ranking = feature_importance(&full);
    let ranking_path = out.join("ranking.csv");
    let file = std::fs::File::create(&ranking_path).map_err(PipelineError::io(&ranking_path))?;
    write_ranking_csv(&ranking, std::io::BufWriter::new(file))?;

    let mut rows = Vec::new();
    let mut columns = Vec::new();
    let mut task = Task::Multiclass;
    for &k in &cfg.feature_counts {
        let clf = TopKClassifier::fit_with_ranking(&train_x, &train_labels, ranking.clone(), k, &hp)?;
        let probs = clf.predict_proba(&test_x)?;
        let preds_name = format!("predictions_k{k:03}.csv");
        let model_name = format!("model_k{k:03}.json");
        PredictionTable::new(&classes, &test_rows, probs).save(out.join(&preds_name))?;
        let model_path = out.join(&model_name);
        std::fs::write(&model_path, serde_json::to_string(&clf).expect("model serializes"))
            .map_err(PipelineError::io(&model_path))?;

        // Score what was written, so the report always matches the file.
        let persisted = PredictionTable::load(out.join(&preds_name))?;
        task = persisted.task(cfg.positive_class.as_deref())?;
        let metrics = metrics_from_predictions(&persisted, cfg.positive_class.as_deref())?;
        let (names, values) = headline(task, &metrics);
        columns = names.into_iter().map(str::to_string).collect();
        rows.push(ReportRow {
            features: k,
            values,
            metrics,
            predictions: preds_name,
            model: model_name,
        });
    }

    let (task_name, positive_class) = match task {
        Task::Binary { positive } => ("binary", Some(classes[positive].clone())),
        Task::Multiclass => ("multiclass", None),
    };
    Ok(ExperimentReport {
        task: task_name.to_string(),
        classes,
        positive_class,
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        n_features_total: width,
        ranking: "ranking.csv".to_string(),
        failed_images,
        columns,
        rows,
    })
}
