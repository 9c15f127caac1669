use std::path::Path;
use std::process::{Command, Output};

use topofp::image_io::{save_image, ImageFormat, RgbImage};
use topofp::synthetic::{write_dataset, SyntheticConfig};

fn topofp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topofp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn small_dataset(dir: &Path) {
    let cfg = SyntheticConfig {
        per_class: 12,
        size: 32,
        ..Default::default()
    };
    write_dataset(&dir.join("data"), &cfg).unwrap();
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn extract_train_predict_metrics_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    assert_code(
        &topofp(
            &["extract", "data/manifest.csv", "-o", "features.csv", "--workers", "2"],
            d,
        ),
        0,
    );
    let features = std::fs::read_to_string(d.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 25);
    assert!(features.starts_with("path,label,split,f000,"));
    assert!(d.join("features.log.csv").exists());

    let train = [
        "train",
        "features.csv",
        "--k",
        "50",
        "-o",
        "model.json",
        "--n-estimators",
        "40",
        "--ranking",
        "ranking.csv",
    ];
    assert_code(&topofp(&train, d), 0);
    assert!(std::fs::read_to_string(d.join("ranking.csv"))
        .unwrap()
        .starts_with("rank,feature,gain\n1,"));

    assert_code(
        &topofp(
            &[
                "predict",
                "model.json",
                "features.csv",
                "--split",
                "test",
                "-o",
                "preds.csv",
            ],
            d,
        ),
        0,
    );
    let preds = std::fs::read_to_string(d.join("preds.csv")).unwrap();
    assert!(preds.starts_with("path,label,split,predicted,p_blob,p_ring\n"));
    assert_eq!(preds.lines().count(), 9);

    assert_code(&topofp(&["metrics", "preds.csv", "-o", "report.json"], d), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    for key in [
        "accuracy",
        "balanced_accuracy",
        "sensitivity",
        "specificity",
        "auc",
        "precision",
        "recall",
        "f1",
    ] {
        let v = report[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }

    let plot = [
        "plot",
        "features.csv",
        "--channel",
        "red",
        "--dim",
        "1",
        "--band",
        "0.40",
        "-o",
        "curves.svg",
    ];
    assert_code(&topofp(&plot, d), 0);
    let svg = std::fs::read_to_string(d.join("curves.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn extraction_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    assert_code(
        &topofp(&["extract", "data/manifest.csv", "-o", "one.csv", "--workers", "1"], d),
        0,
    );
    assert_code(
        &topofp(
            &["extract", "data/manifest.csv", "-o", "three.csv", "--workers", "3"],
            d,
        ),
        0,
    );
    assert_eq!(
        std::fs::read(d.join("one.csv")).unwrap(),
        std::fs::read(d.join("three.csv")).unwrap()
    );
}

#[test]
fn partial_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    std::fs::write(d.join("data/ring_0001.ppm"), b"P6\n32 32\n255\ntruncated").unwrap();
    let out = topofp(&["extract", "data/manifest.csv", "-o", "features.csv"], d);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ring_0001.ppm"));
    assert_eq!(
        std::fs::read_to_string(d.join("features.csv")).unwrap().lines().count(),
        24
    );
    let log = std::fs::read_to_string(d.join("features.log.csv")).unwrap();
    assert!(log.contains("ring_0001.ppm,failed"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "file,class\nx,y\n").unwrap();
    assert_code(&topofp(&["extract", "bad.csv", "-o", "f.csv"], d), 1);
    assert_code(&topofp(&["extract", "missing.csv", "-o", "f.csv"], d), 1);
    assert_code(&topofp(&["diagram", "nope.pgm"], d), 1);
    assert_code(&topofp(&["frobnicate"], d), 1);
    assert_code(&topofp(&["diagram", "x.pgm", "--channel", "purple"], d), 1);
    assert_code(&topofp(&["--help"], d), 0);
}

#[test]
fn diagram_matches_oracle_and_vectorize_emits_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let img = RgbImage::from_fn(9, 11, |r, c| {
        let v = ((r * 71 + c * 29) % 256) as u8;
        [v, 255 - v, v / 2]
    })
    .unwrap();
    save_image(&img, d.join("small.ppm"), ImageFormat::PpmAscii).unwrap();
    for channel in ["red", "green", "blue", "gray"] {
        let fast = topofp(&["diagram", "small.ppm", "--channel", channel], d);
        let oracle = topofp(&["diagram", "small.ppm", "--channel", channel, "--oracle"], d);
        assert_code(&fast, 0);
        assert_eq!(fast.stdout, oracle.stdout);
    }
    let json: serde_json::Value = serde_json::from_slice(&topofp(&["diagram", "small.ppm"], d).stdout).unwrap();
    assert!(json.as_array().unwrap().iter().any(|b| b["death"].is_null()));

    assert_code(&topofp(&["vectorize", "small.ppm", "-o", "vec.csv"], d), 0);
    let vec = std::fs::read_to_string(d.join("vec.csv")).unwrap();
    let lines: Vec<&str> = vec.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 403);
    assert!(lines[1].starts_with("small.ppm,,,"));
}

#[test]
fn experiment_report_mirrors_the_ablation_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    std::fs::write(
        d.join("experiment.json"),
        r#"{"manifest": "data/manifest.csv", "output_dir": "out", "feature_counts": [50, 100, 200, 400], "hyperparams": {"n_estimators": 30}}"#,
    )
    .unwrap();
    let out = topofp(&["experiment", "experiment.json", "-o", "report.json"], d);
    assert_code(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        report["columns"],
        serde_json::json!(["accuracy", "sensitivity", "specificity"])
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("| 400 |"));

    // The report's metrics recompute from the written predictions.
    for row in rows {
        let preds = format!("out/{}", row["predictions"].as_str().unwrap());
        let m = topofp(&["metrics", &preds], d);
        assert_code(&m, 0);
        let recomputed: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
        assert_eq!(recomputed, row["metrics"]);
    }
}
