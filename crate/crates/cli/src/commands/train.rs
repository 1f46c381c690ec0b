//! Filters, balancing, grid search and threshold selection on a feature
//! table; writes the model artifact and the selection report.

use std::path::{Path, PathBuf};

use dosesim_ml::{train_model, FeatureMatrix, TrainConfig};
use dosesim_radiomics::FeatureTable;
use log::info;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{ensure_dir, run_id, sha256_file, write_json, Sidecar};

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    Ok(FeatureMatrix::from_table(&FeatureTable::read_csv(path)?)?)
}

#[derive(Serialize)]
struct Summary<'a> {
    run_id: &'a str,
    selector: &'a str,
    classifier: &'a str,
    k: usize,
    threshold: f64,
}

pub fn run(features: &Path, perturbed: &[PathBuf], cfg: &TrainConfig, seed: u64, out: &Path) -> Result<()> {
    cfg.validate()?;
    ensure_dir(out)?;
    let sidecar = Sidecar::start(out, "train");
    let fm = load_features(features)?;
    let pert = perturbed.iter().map(|p| load_features(p)).collect::<Result<Vec<_>>>()?;
    for (p, path) in pert.iter().zip(perturbed) {
        if p.names != fm.names || p.ids != fm.ids {
            return Err(CliError::Data(format!("{} is not row-aligned with {}", path.display(), features.display())));
        }
    }
    let mut hashes = vec![sha256_file(features)?];
    for p in perturbed {
        hashes.push(sha256_file(p)?);
    }
    let id = run_id("train", &(cfg, seed), &hashes)?;
    let (model, report) = train_model(&fm, &pert, cfg, seed)?;
    model.save(&out.join("model.json"))?;
    write_json(&out.join("selection_report.json"), &report)?;
    let c = &report.chosen;
    info!(
        "train: {} + {} (k = {}), validation mean {:.3}, threshold {:.3}",
        c.selector.slug(),
        c.classifier.slug(),
        c.k,
        c.score,
        c.threshold
    );
    sidecar.finish(&id, serde_json::to_value(Summary {
        run_id: &id,
        selector: c.selector.slug(),
        classifier: c.classifier.slug(),
        k: c.k,
        threshold: c.threshold,
    }).map_err(|e| CliError::Data(e.to_string()))?)
}
