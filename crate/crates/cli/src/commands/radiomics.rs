//! Feature extraction for every labelled nodule of a manifest, plus one
//! table per configured ROI perturbation (row-aligned with the original).

use std::path::Path;

use dosesim_core::io::{load_mask, load_volume, DatasetManifest};
use dosesim_radiomics::{extract_all, feature_names, FeatureRow, FeatureSchema, FeatureTable, PerturbMode, PerturbationSpec};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::derived_seed;
use crate::config::RadiomicsConfig;
use crate::error::Result;
use crate::output::{ensure_dir, run_id, sha256_file, write_json, Sidecar, REPORT_SCHEMA_VERSION};

pub fn mode_slug(m: PerturbMode) -> &'static str {
    match m {
        PerturbMode::Dilate => "dilate",
        PerturbMode::Erode => "erode",
        PerturbMode::ContourNoise => "contour_noise",
    }
}

/// File name of the k-th perturbed table.
pub fn perturbed_table_name(k: usize, m: PerturbMode) -> String {
    format!("features_p{k}_{}.csv", mode_slug(m))
}

#[derive(Debug, Serialize)]
struct RadiomicsReport {
    schema_version: u32,
    run_id: String,
    schema_hash: String,
    n_features: usize,
    n_rows: usize,
    n_malignant: usize,
    n_excluded_indeterminate: usize,
    features: String,
    perturbed: Vec<String>,
}

type SubjectRows = (Vec<Vec<FeatureRow>>, usize, Vec<String>);

pub fn run(manifest_path: &Path, cfg: &RadiomicsConfig, seed: u64, out: &Path) -> Result<()> {
    cfg.extraction.validate()?;
    ensure_dir(out)?;
    let sidecar = Sidecar::start(out, "radiomics");
    let manifest = DatasetManifest::load(manifest_path)?;
    let names = feature_names();
    let variants = 1 + cfg.perturbations.len();
    let per_subject: Vec<SubjectRows> = manifest
        .records
        .par_iter()
        .map(|r| {
            let volume = load_volume(&r.volume_path)?;
            let mut rows: Vec<Vec<FeatureRow>> = vec![Vec::new(); variants];
            let mut excluded = 0;
            let mut hashes = vec![sha256_file(&r.volume_path)?];
            for mp in &r.mask_paths {
                hashes.push(sha256_file(mp)?);
                let mask = load_mask(mp)?;
                let Some(label) = mask.label() else {
                    warn!("{} nodule {}: malignancy score 4 is indeterminate, skipped", r.subject_id, mask.nodule_id());
                    excluded += 1;
                    continue;
                };
                let key = format!("{}/{}", r.subject_id, mask.nodule_id());
                for (v, slot) in rows.iter_mut().enumerate() {
                    let spec = match v {
                        0 => None,
                        _ => {
                            let pc = cfg.perturbations[v - 1];
                            Some(PerturbationSpec::new(pc.mode, pc.magnitude, derived_seed(seed, &format!("{key}#{v}")))?)
                        }
                    };
                    let fv = extract_all(&volume, &mask, &cfg.extraction, spec.as_ref())?;
                    slot.push(FeatureRow {
                        subject_id: r.subject_id.clone(),
                        nodule_id: mask.nodule_id().to_string(),
                        label: label.as_binary(),
                        values: fv.values,
                    });
                }
            }
            info!("radiomics {}: {} nodules", r.subject_id, rows[0].len());
            Ok((rows, excluded, hashes))
        })
        .collect::<Result<_>>()?;

    let mut tables: Vec<FeatureTable> = (0..variants).map(|_| FeatureTable::new(names.clone())).collect();
    let mut excluded = 0;
    let mut hashes = Vec::new();
    for (rows, ex, h) in per_subject {
        for (t, rs) in tables.iter_mut().zip(rows) {
            for row in rs {
                t.push(row)?;
            }
        }
        excluded += ex;
        hashes.extend(h);
    }
    let schema = FeatureSchema::new(names.clone(), cfg.extraction.clone())?;
    schema.write(&out.join("features_schema.json"))?;
    tables[0].write_csv(&out.join("features.csv"))?;
    let mut perturbed = Vec::new();
    for (k, pc) in cfg.perturbations.iter().enumerate() {
        let name = perturbed_table_name(k, pc.mode);
        tables[k + 1].write_csv(&out.join(&name))?;
        perturbed.push(name);
    }
    let id = run_id("radiomics", &(cfg, seed), &hashes)?;
    let report = RadiomicsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: id.clone(),
        schema_hash: schema.hash.clone(),
        n_features: names.len(),
        n_rows: tables[0].len(),
        n_malignant: tables[0].labels().iter().filter(|&&l| l == 1).count(),
        n_excluded_indeterminate: excluded,
        features: "features.csv".into(),
        perturbed,
    };
    write_json(&out.join("radiomics_report.json"), &report)?;
    info!("radiomics: {} rows × {} features", report.n_rows, report.n_features);
    sidecar.finish(&id, serde_json::Value::Null)
}
