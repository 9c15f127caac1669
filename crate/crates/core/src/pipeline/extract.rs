use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{DatasetManifest, FeatureRow, FeatureTable, PipelineError};
use crate::image_io::load_image_auto;
use crate::vectorize::{feature_vector_with_layout, FeatureLayout};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Worker threads; `None` uses the number of logical CPUs.
    pub workers: Option<usize>,
    /// Append the superlevel blocks after the sublevel ones.
    pub superlevel: bool,
}

impl ExtractOptions {
    pub fn layout(&self) -> FeatureLayout {
        if self.superlevel {
            FeatureLayout::with_superlevel()
        } else {
            FeatureLayout::standard()
        }
    }
}

/// Outcome of processing one manifest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageLog {
    pub path: String,
    pub millis: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    /// Rows of the images that succeeded, in manifest order.
    pub table: FeatureTable,
    /// One entry per manifest entry, in manifest order.
    pub log: Vec<ImageLog>,
}

impl Extraction {
    pub fn failures(&self) -> impl Iterator<Item = &ImageLog> {
        self.log.iter().filter(|l| l.error.is_some())
    }

    pub fn is_partial(&self) -> bool {
        self.failures().next().is_some()
    }

    /// The log as CSV `path,status,millis,error`.
    pub fn log_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "status", "millis", "error"])
            .expect("in-memory write");
        for l in &self.log {
            let status = if l.error.is_some() { "failed" } else { "ok" };
            w.write_record([
                l.path.as_str(),
                status,
                &format!("{:.3}", l.millis),
                l.error.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn save_log(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.log_csv()).map_err(PipelineError::io(path))
    }
}

/// Vectorizes every manifest image on a pool of `opts.workers` threads.
/// Failed images are logged and skipped; it is an error only when every
/// image fails.
pub fn extract_dataset(manifest: &DatasetManifest, opts: &ExtractOptions) -> Result<Extraction, PipelineError> {
    let layout = opts.layout();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Option<FeatureRow>, ImageLog)> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let start = Instant::now();
                let outcome =
                    load_image_auto(manifest.resolve(entry)).map(|img| feature_vector_with_layout(&img, &layout));
                let millis = start.elapsed().as_secs_f64() * 1e3;
                match outcome {
                    Ok(v) => (
                        Some(FeatureRow {
                            path: entry.path.clone(),
                            label: entry.label.clone(),
                            split: Some(entry.split),
                            values: v.values().iter().map(|&x| x as f64).collect(),
                        }),
                        ImageLog {
                            path: entry.path.clone(),
                            millis,
                            error: None,
                        },
                    ),
                    Err(e) => (
                        None,
                        ImageLog {
                            path: entry.path.clone(),
                            millis,
                            error: Some(e.to_string()),
                        },
                    ),
                }
            })
            .collect()
    });
    let (rows, log): (Vec<Option<FeatureRow>>, Vec<ImageLog>) = results.into_iter().unzip();
    let rows: Vec<FeatureRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(PipelineError::AllFailed(log.len()));
    }
    Ok(Extraction {
        table: FeatureTable {
            feature_names: (0..layout.len()).map(FeatureLayout::feature_name).collect(),
            rows,
        },
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::{save_image, ImageFormat, RgbImage};

    fn write_images(dir: &Path) -> DatasetManifest {
        for (i, name) in ["a.pgm", "b.ppm", "c.pgm"].iter().enumerate() {
            let img = RgbImage::from_fn(6, 5, |r, c| {
                let v = ((r * 40 + c * 17 + i * 90) % 256) as u8;
                [v, v, v]
            })
            .unwrap();
            let format = if name.ends_with("ppm") {
                ImageFormat::PpmBinary
            } else {
                ImageFormat::PgmAscii
            };
            save_image(&img, dir.join(name), format).unwrap();
        }
        DatasetManifest::parse("path,label,split\na.pgm,x,train\nb.ppm,y,train\nc.pgm,x,test\n", dir).unwrap()
    }

    #[test]
    fn three_images_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_images(dir.path());
        let out = extract_dataset(&m, &ExtractOptions::default()).unwrap();
        assert_eq!(out.table.rows.len(), 3);
        assert_eq!(out.table.width(), 400);
        assert_eq!(out.table.feature_names[0], "f000");
        assert!(!out.is_partial());
        let paths: Vec<&str> = out.table.rows.iter().map(|r| r.path.as_str()).collect();
        assert_eq!(paths, ["a.pgm", "b.ppm", "c.pgm"]);
    }

    #[test]
    fn corrupt_image_is_skipped_and_logged() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_images(dir.path());
        std::fs::write(dir.path().join("b.ppm"), b"P6\n3 3\n255\nshort").unwrap();
        let out = extract_dataset(&m, &ExtractOptions::default()).unwrap();
        assert_eq!(out.table.rows.len(), 2);
        assert!(out.is_partial());
        let failed: Vec<&str> = out.failures().map(|l| l.path.as_str()).collect();
        assert_eq!(failed, ["b.ppm"]);
        assert!(out.log_csv().contains("b.ppm,failed"));
    }

    #[test]
    fn all_failed_is_an_error() {
        let m = DatasetManifest::parse("path,label,split\nmissing.pgm,x,train\n", "/nonexistent").unwrap();
        assert!(matches!(
            extract_dataset(&m, &ExtractOptions::default()),
            Err(PipelineError::AllFailed(1))
        ));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_images(dir.path());
        let one = extract_dataset(
            &m,
            &ExtractOptions {
                workers: Some(1),
                superlevel: true,
            },
        )
        .unwrap();
        let four = extract_dataset(
            &m,
            &ExtractOptions {
                workers: Some(4),
                superlevel: true,
            },
        )
        .unwrap();
        assert_eq!(one.table.to_csv(), four.table.to_csv());
        assert_eq!(one.table.width(), 800);
    }
}
