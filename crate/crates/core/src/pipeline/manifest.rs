use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// The only manifest layout so far: a CSV with header `path,label,split`.
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected train or test)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// As written in the manifest; relative paths are resolved against
    /// the manifest's directory.
    pub path: String,
    pub label: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub version: u32,
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| PipelineError::Manifest {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != ["path", "label", "split"] {
            return Err(PipelineError::Manifest {
                line: 1,
                msg: format!(
                    "header must be path,label,split, found {:?}",
                    header.iter().collect::<Vec<_>>()
                ),
            });
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| PipelineError::Manifest {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |msg: String| PipelineError::Manifest { line, msg };
            let (path, label, split) = (&rec[0], &rec[1], &rec[2]);
            if path.is_empty() {
                return Err(err("empty path".into()));
            }
            if label.is_empty() {
                return Err(err("empty label".into()));
            }
            let split = split.parse().map_err(err)?;
            if !seen.insert(path.to_string()) {
                return Err(PipelineError::Manifest {
                    line,
                    msg: format!("duplicate path {path:?}"),
                });
            }
            entries.push(ManifestEntry {
                path: path.to_string(),
                label: label.to_string(),
                split,
            });
        }
        if entries.is_empty() {
            return Err(PipelineError::Manifest {
                line: 1,
                msg: "manifest has no entries".into(),
            });
        }
        Ok(Self {
            version: MANIFEST_VERSION,
            base_dir: base_dir.into(),
            entries,
        })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Experiments need both splits.
    pub fn validate_for_experiment(&self) -> Result<(), PipelineError> {
        for split in [Split::Train, Split::Test] {
            if !self.entries.iter().any(|e| e.split == split) {
                return Err(PipelineError::Split(format!("manifest has no {split} entries")));
            }
        }
        Ok(())
    }
}
