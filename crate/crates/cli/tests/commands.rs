use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &str = r#"{
  "phantom": {"n_subjects": 4, "dims": [48, 48, 8], "spacing": [1.0, 1.0, 2.0], "nodules_per_subject": [1, 1]},
  "metrics": {"patch_size": 32, "kid_subset_size": 10}
}"#;

const SMALL: &str = r#"{
  "phantom": {"n_subjects": 16, "dims": [64, 64, 12], "spacing": [1.0, 1.0, 2.0],
              "nodules_per_subject": [1, 2], "malignant_fraction": 0.5},
  "train": {"subset_sizes": [5], "selectors": ["mrmr", "pca"], "classifiers": ["logistic_regression", "knn"]},
  "evaluate": {"n_iterations": 100}
}"#;

fn dosesim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dosesim"))
        .current_dir(dir)
        .args(["--config", "config.json", "--seed", "5", "--log", "error"])
        .args(args)
        .output()
        .unwrap()
}

fn ok(o: Output) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), config).unwrap();
    dir
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = setup(TINY);
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"phantom": {"n_subjects": 2}, "typo": 1}"#).unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_dosesim"))
        .current_dir(d)
        .args(["--config", "bad.json", "phantom"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(dosesim(d, &["--workers", "0", "phantom"]).status.code(), Some(2));
    assert_eq!(dosesim(d, &["--log", "loud", "phantom"]).status.code(), Some(2));
    assert_eq!(dosesim(d, &["degrade", "--manifest", "missing.csv"]).status.code(), Some(3));
    assert_eq!(dosesim(d, &["compare", "a.json", "b.json"]).status.code(), Some(3));
}

#[test]
fn degrade_resumes_from_state() {
    let dir = setup(TINY);
    let d = dir.path();
    ok(dosesim(d, &["--out", "ph", "phantom"]));
    ok(dosesim(d, &["--out", "deg", "degrade", "--manifest", "ph/manifest.csv"]));
    let first = json(&d.join("deg/degrade.run.json"));
    assert_eq!(first["details"]["degraded"], 4);
    let volume = fs::read(d.join("deg/volumes/sub000.mha")).unwrap();
    let manifest = fs::read(d.join("deg/manifest.csv")).unwrap();

    ok(dosesim(d, &["--out", "deg", "degrade", "--manifest", "ph/manifest.csv"]));
    let second = json(&d.join("deg/degrade.run.json"));
    assert_eq!(second["details"]["degraded"], 0);
    assert_eq!(second["details"]["resumed"], 4);
    assert_eq!(fs::read(d.join("deg/volumes/sub000.mha")).unwrap(), volume);
    assert_eq!(fs::read(d.join("deg/manifest.csv")).unwrap(), manifest);

    // A different method invalidates the stored state.
    ok(dosesim(d, &["--out", "deg", "degrade", "--manifest", "ph/manifest.csv", "--method", "simple"]));
    assert_eq!(json(&d.join("deg/degrade.run.json"))["details"]["degraded"], 4);
    let manifest = fs::read_to_string(d.join("deg/manifest.csv")).unwrap();
    assert!(manifest.lines().skip(1).all(|l| l.contains("LDCT")));
}

#[test]
fn metrics_against_itself_and_missing_counterpart() {
    let dir = setup(TINY);
    let d = dir.path();
    ok(dosesim(d, &["--out", "ph", "phantom"]));
    ok(dosesim(d, &["--out", "same", "metrics", "--real", "ph/manifest.csv", "--generated", "ph/manifest.csv"]));
    let m = json(&d.join("same/metrics.json"));
    assert_eq!(m["mae"].as_f64().unwrap(), 0.0);
    assert!((m["ssim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(m["fid"].as_f64().unwrap().abs() < 1e-6);
    let keys: Vec<&str> = m.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for k in ["mae", "ssim", "ms_ssim", "fid", "kid_mean", "kid_std", "n_patches", "embedder_id"] {
        assert!(keys.contains(&k), "{k}");
    }

    let full = fs::read_to_string(d.join("ph/manifest.csv")).unwrap();
    let lines: Vec<&str> = full.lines().collect();
    fs::write(d.join("ph/partial.csv"), lines[..lines.len() - 1].join("\n") + "\n").unwrap();
    let o = dosesim(d, &["--out", "part", "metrics", "--real", "ph/manifest.csv", "--generated", "ph/partial.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn train_evaluate_and_compare_three_methods() {
    let dir = setup(SMALL);
    let d = dir.path();
    ok(dosesim(d, &["--out", "ph", "phantom"]));
    ok(dosesim(d, &["--out", "rad", "radiomics", "--manifest", "ph/manifest.csv"]));
    let report = json(&d.join("rad/radiomics_report.json"));
    assert_eq!(report["n_features"], 851);
    ok(dosesim(
        d,
        &["--out", "tr", "train", "--features", "rad/features.csv", "--perturbed", "rad/features_p0_dilate.csv"],
    ));
    let sel = json(&d.join("tr/selection_report.json"));
    assert_eq!(sel["candidates"].as_array().unwrap().len(), 4);

    let tables = ["features", "features_p1_erode", "features_p2_contour_noise"];
    for (i, t) in tables.iter().enumerate() {
        let name = format!("m{i}");
        let features = format!("rad/{t}.csv");
        ok(dosesim(d, &["--out", &name, "evaluate", "--model", "tr/model.json", "--features", &features, "--name", &name]));
        let preds = fs::read_to_string(d.join(&name).join("predictions.csv")).unwrap();
        assert_eq!(preds.lines().count() as u64, report["n_rows"].as_u64().unwrap() + 1);
    }
    ok(dosesim(d, &["--out", "cmp", "compare", "m0/evaluation.json", "m1/evaluation.json", "m2/evaluation.json"]));
    let cmp = json(&d.join("cmp/comparison.json"));
    assert_eq!(cmp["methods"].as_object().unwrap().len(), 3);
    let auc = &cmp["tests"]["auc"];
    let p = auc["friedman"]["p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    if auc["significant"].as_bool().unwrap() {
        assert_eq!(auc["pairwise"].as_array().unwrap().len(), 3);
    }
    let csv = fs::read_to_string(d.join("cmp/violin_auc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 100);
    assert!(fs::read_to_string(d.join("cmp/violin_auc.svg")).unwrap().starts_with("<svg"));

    // Reports from different bootstrap settings cannot be paired.
    fs::write(d.join("other.json"), r#"{"evaluate": {"n_iterations": 50}, "phantom": {"n_subjects": 16, "dims": [64, 64, 12], "spacing": [1.0, 1.0, 2.0], "nodules_per_subject": [1, 2], "malignant_fraction": 0.5}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dosesim"))
        .current_dir(d)
        .args(["--config", "other.json", "--seed", "5", "--out", "m3", "evaluate", "--model", "tr/model.json"])
        .args(["--features", "rad/features.csv", "--name", "m3"])
        .output()
        .unwrap();
    ok(o);
    let o = dosesim(d, &["--out", "cmp2", "compare", "m0/evaluation.json", "m3/evaluation.json"]);
    assert_eq!(o.status.code(), Some(3));
}
