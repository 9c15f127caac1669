//! Batch processing: manifests, parallel feature extraction, feature and
//! prediction tables, and feature-count experiments.

mod experiment;
mod extract;
mod manifest;
mod table;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, ReportRow, DEFAULT_FEATURE_COUNTS};
pub use extract::{extract_dataset, ExtractOptions, Extraction, ImageLog};
pub use manifest::{DatasetManifest, ManifestEntry, Split, MANIFEST_VERSION};
pub use table::{metrics_from_predictions, FeatureRow, FeatureTable, PredictionRow, PredictionTable, SplitFilter};

use thiserror::Error;

use crate::image_io::ImageError;
use crate::mlkit::MlError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("manifest line {line}: {msg}")]
    Manifest { line: u64, msg: String },
    #[error("all {0} images failed to process")]
    AllFailed(usize),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl PipelineError {
    pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        PipelineError::Format {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }
}
