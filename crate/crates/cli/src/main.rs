use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topofp::filtration::{build_filtration, Direction};
use topofp::image_io::{extract_channel, load_image_auto, Channel};
use topofp::mlkit::{write_ranking_csv, GbtHyperparams, TopKClassifier};
use topofp::persistence::{compute_pd, diagrams_to_json};
use topofp::pipeline::{
    extract_dataset, metrics_from_predictions, run_experiment, DatasetManifest, ExperimentConfig, ExtractOptions,
    FeatureRow, FeatureTable, PredictionTable, SplitFilter,
};
use topofp::vectorize::{class_band_curves, feature_vector_with_layout, render_betti_svg, FeatureLayout};
use topofp::verification::reduce_boundary_matrix;

/// Topological fingerprints of images and a boosted-tree classifier
/// trained on them.
#[derive(Parser)]
#[command(name = "topofp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vectorize every image of a manifest (CSV `path,label,split`).
    Extract {
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Worker threads (default: logical CPUs).
        #[arg(long)]
        workers: Option<usize>,
        /// Append 400 superlevel features after the sublevel ones.
        #[arg(long)]
        superlevel: bool,
        /// Per-image log (default: next to the output, `.log.csv`).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Persistence diagrams of one channel as JSON.
    Diagram {
        image: PathBuf,
        #[arg(long, default_value = "gray")]
        channel: Channel,
        #[arg(long, default_value = "sublevel")]
        direction: Direction,
        /// Use the boundary-matrix reduction (small images only).
        #[arg(long)]
        oracle: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Feature vector of one image, as a one-row feature CSV.
    Vectorize {
        image: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        superlevel: bool,
    },
    /// Rank features, keep the top k and train a classifier.
    Train {
        features: PathBuf,
        #[arg(long, default_value_t = 200)]
        k: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Rows to train on: train, test or all.
        #[arg(long, default_value = "train")]
        split: SplitFilter,
        /// Also write the feature ranking as CSV `rank,feature,gain`.
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[command(flatten)]
        hyperparams: HyperparamArgs,
    },
    /// Class probabilities for every row of a feature CSV.
    Predict {
        model: PathBuf,
        features: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        split: SplitFilter,
    },
    /// Score a predictions CSV.
    Metrics {
        predictions: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Positive class of a binary task (default: last label in sorted order).
        #[arg(long)]
        positive: Option<String>,
    },
    /// Per-class median Betti curves with quantile bands, as SVG.
    Plot {
        features: PathBuf,
        #[arg(long, default_value = "gray")]
        channel: Channel,
        #[arg(long, default_value_t = 0)]
        dim: u8,
        /// Width of the central quantile band.
        #[arg(long, default_value_t = 0.40)]
        band: f64,
        #[arg(long, default_value = "all")]
        split: SplitFilter,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a feature-count sweep described by a JSON config.
    Experiment {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct HyperparamArgs {
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 300)]
    n_estimators: usize,
    #[arg(long, default_value_t = 0.9)]
    subsample: f64,
    #[arg(long, default_value_t = 0.9)]
    colsample: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl From<&HyperparamArgs> for GbtHyperparams {
    fn from(a: &HyperparamArgs) -> Self {
        GbtHyperparams {
            learning_rate: a.learning_rate,
            max_depth: a.max_depth,
            n_estimators: a.n_estimators,
            subsample: a.subsample,
            colsample_per_tree: a.colsample,
            seed: a.seed,
        }
    }
}

/// Successful runs that still skipped some inputs.
enum Status {
    Complete,
    Partial,
}

/// Writes to `path`, or to stdout when it is absent or `-`.
fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, content).with_context(|| format!("cannot write {}", p.display()))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn layout_for(width: usize) -> Result<FeatureLayout> {
    for layout in [FeatureLayout::standard(), FeatureLayout::with_superlevel()] {
        if layout.len() == width {
            return Ok(layout);
        }
    }
    bail!("feature tables must have 400 or 800 feature columns, found {width}")
}

fn run(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Extract {
            manifest,
            output,
            workers,
            superlevel,
            log,
        } => {
            let m = DatasetManifest::load(&manifest)?;
            let extraction = extract_dataset(&m, &ExtractOptions { workers, superlevel })?;
            extraction.table.save(&output)?;
            let log = log.unwrap_or_else(|| output.with_extension("log.csv"));
            extraction.save_log(&log)?;
            let failures: Vec<_> = extraction.failures().collect();
            eprintln!(
                "extracted {} of {} images into {} (log: {})",
                extraction.table.rows.len(),
                extraction.log.len(),
                output.display(),
                log.display()
            );
            for f in &failures {
                eprintln!("failed: {}: {}", f.path, f.error.as_deref().unwrap_or(""));
            }
            Ok(if failures.is_empty() {
                Status::Complete
            } else {
                Status::Partial
            })
        }
        Command::Diagram {
            image,
            channel,
            direction,
            oracle,
            output,
        } => {
            let img = load_image_auto(&image)?;
            let field = build_filtration(&extract_channel(&img, channel), direction, Some(channel));
            let (pd0, pd1) = if oracle {
                reduce_boundary_matrix(&field)?
            } else {
                compute_pd(&field)
            };
            write_output(output.as_deref(), &(diagrams_to_json(&[&pd0, &pd1]) + "\n"))?;
            Ok(Status::Complete)
        }
        Command::Vectorize {
            image,
            output,
            superlevel,
        } => {
            let layout = if superlevel {
                FeatureLayout::with_superlevel()
            } else {
                FeatureLayout::standard()
            };
            let v = feature_vector_with_layout(&load_image_auto(&image)?, &layout);
            let table = FeatureTable {
                feature_names: (0..layout.len()).map(FeatureLayout::feature_name).collect(),
                rows: vec![FeatureRow {
                    path: image.display().to_string(),
                    label: String::new(),
                    split: None,
                    values: v.values().iter().map(|&x| x as f64).collect(),
                }],
            };
            write_output(output.as_deref(), &table.to_csv())?;
            Ok(Status::Complete)
        }
        Command::Train {
            features,
            k,
            output,
            split,
            ranking,
            hyperparams,
        } => {
            let table = FeatureTable::load(&features)?;
            let (x, rows) = table.select(split).context("no rows selected for training")?;
            if rows.iter().any(|r| r.label.is_empty()) {
                bail!("training rows must all be labeled");
            }
            let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
            let clf = TopKClassifier::fit(&x, &labels, k, &GbtHyperparams::from(&hyperparams))?;
            std::fs::write(&output, serde_json::to_string(&clf)?)
                .with_context(|| format!("cannot write {}", output.display()))?;
            if let Some(path) = ranking {
                let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
                write_ranking_csv(&clf.ranking, BufWriter::new(file))?;
            }
            eprintln!(
                "trained on {} rows, kept {k} of {} features, classes {:?}",
                rows.len(),
                x.cols(),
                clf.model.classes
            );
            Ok(Status::Complete)
        }
        Command::Predict {
            model,
            features,
            output,
            split,
        } => {
            let text = std::fs::read_to_string(&model).with_context(|| format!("cannot read {}", model.display()))?;
            let clf: TopKClassifier =
                serde_json::from_str(&text).with_context(|| format!("{} is not a model file", model.display()))?;
            let table = FeatureTable::load(&features)?;
            let (x, rows) = table.select(split).context("no rows selected for prediction")?;
            let probs = clf.predict_proba(&x)?;
            write_output(
                output.as_deref(),
                &PredictionTable::new(&clf.model.classes, &rows, probs).to_csv(),
            )?;
            Ok(Status::Complete)
        }
        Command::Metrics {
            predictions,
            output,
            positive,
        } => {
            let table = PredictionTable::load(&predictions)?;
            let report = metrics_from_predictions(&table, positive.as_deref())?;
            write_output(output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(Status::Complete)
        }
        Command::Plot {
            features,
            channel,
            dim,
            band,
            split,
            output,
        } => {
            let table = FeatureTable::load(&features)?;
            let layout = layout_for(table.width())?;
            let (rows, labels): (Vec<Vec<f64>>, Vec<String>) = table
                .rows
                .iter()
                .filter(|r| split.accepts(r.split))
                .map(|r| {
                    let label = if r.label.is_empty() {
                        "unlabeled".to_string()
                    } else {
                        r.label.clone()
                    };
                    (r.values.clone(), label)
                })
                .unzip();
            let curves = class_band_curves(&rows, &labels, &layout, channel, dim, band)?;
            write_output(output.as_deref(), &render_betti_svg(&curves)?)?;
            Ok(Status::Complete)
        }
        Command::Experiment { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg)?;
            write_output(output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            eprint!("{}", report.render_table());
            for f in &report.failed_images {
                eprintln!("failed: {f}");
            }
            Ok(if report.failed_images.is_empty() {
                Status::Complete
            } else {
                Status::Partial
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
