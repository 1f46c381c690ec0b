//! Sinogram-domain dose degradation of every volume in a manifest, with
//! content-hash resume.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dosesim_core::degrade::{degrade_volume, DegradeConfig, DegradeMethod};
use dosesim_core::io::{load_volume, save_volume, DatasetManifest, DoseClass, ManifestRecord, LDCT_MAX_TUBE_CURRENT_MA};
use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::{ensure_dir, read_json, run_id, sha256_bytes, sha256_file, write_json, Sidecar, REPORT_SCHEMA_VERSION};

const STATE_FILE: &str = "degrade_state.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SubjectState {
    /// Hash of the input volume bytes, effective config and subject id.
    key: String,
    output_sha256: String,
}

#[derive(Debug, Serialize)]
struct SubjectReport {
    subject_id: String,
    input_sha256: String,
    output_sha256: String,
}

#[derive(Debug, Serialize)]
struct DegradeReport<'a> {
    schema_version: u32,
    run_id: String,
    config: &'a DegradeConfig,
    subjects: Vec<SubjectReport>,
    manifest: &'a str,
}

/// Tube current recorded for a degraded scan.
fn degraded_tube_current(cfg: &DegradeConfig, original: f64) -> f64 {
    match cfg.method {
        DegradeMethod::PhysicsSinogram => original * cfg.physics.a,
        DegradeMethod::SimpleSinogram => original.min(LDCT_MAX_TUBE_CURRENT_MA),
    }
}

pub fn run(manifest_path: &Path, cfg: &DegradeConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let sidecar = Sidecar::start(out, "degrade");
    let manifest = DatasetManifest::load(manifest_path)?;
    for r in &manifest.records {
        if !r.volume_path.is_file() {
            return Err(CliError::Data(format!("subject {}: missing volume {}", r.subject_id, r.volume_path.display())));
        }
        if let Some(m) = r.mask_paths.iter().find(|m| !m.is_file()) {
            return Err(CliError::Data(format!("subject {}: missing mask {}", r.subject_id, m.display())));
        }
    }
    ensure_dir(&out.join("volumes"))?;
    ensure_dir(&out.join("masks"))?;
    let state_path = out.join(STATE_FILE);
    let mut state: BTreeMap<String, SubjectState> = if state_path.is_file() { read_json(&state_path)? } else { BTreeMap::new() };
    let cfg_json = serde_json::to_vec(cfg).map_err(|e| CliError::Data(e.to_string()))?;

    let mut records = Vec::with_capacity(manifest.records.len());
    let mut subjects = Vec::with_capacity(manifest.records.len());
    let mut input_hashes = Vec::new();
    let (mut done, mut skipped) = (0usize, 0usize);
    for r in &manifest.records {
        let bytes = fs::read(&r.volume_path).map_err(|e| CliError::io(&r.volume_path, e))?;
        let input_sha256 = sha256_bytes(&bytes);
        let key = sha256_bytes(&[input_sha256.as_bytes(), &cfg_json, r.subject_id.as_bytes()].concat());
        let rel = PathBuf::from("volumes").join(format!("{}.mha", r.subject_id));
        let target = out.join(&rel);
        let resumable = state.get(&r.subject_id).is_some_and(|s| {
            s.key == key && target.is_file() && sha256_file(&target).is_ok_and(|h| h == s.output_sha256)
        });
        let output_sha256 = if resumable {
            skipped += 1;
            info!("degrade {}: up to date", r.subject_id);
            state[&r.subject_id].output_sha256.clone()
        } else {
            let v = load_volume(&r.volume_path)?;
            let d = degrade_volume(&v, cfg, &r.subject_id)?;
            save_volume(&d, &target)?;
            let h = sha256_file(&target)?;
            state.insert(r.subject_id.clone(), SubjectState { key, output_sha256: h.clone() });
            write_json(&state_path, &state)?;
            done += 1;
            info!("degrade {}: {} slices", r.subject_id, v.dims().nz);
            h
        };
        let mut mask_paths = Vec::with_capacity(r.mask_paths.len());
        for m in &r.mask_paths {
            let name = m.file_name().ok_or_else(|| CliError::Data(format!("mask path {} has no file name", m.display())))?;
            let dst = out.join("masks").join(name);
            fs::copy(m, &dst).map_err(|e| CliError::io(m, e))?;
            mask_paths.push(dst);
        }
        let ma = degraded_tube_current(cfg, r.tube_current_ma);
        records.push(ManifestRecord {
            subject_id: r.subject_id.clone(),
            volume_path: target,
            mask_paths,
            dose_class: DoseClass::for_tube_current(ma),
            tube_current_ma: ma,
        });
        input_hashes.push(input_sha256.clone());
        subjects.push(SubjectReport { subject_id: r.subject_id.clone(), input_sha256, output_sha256 });
    }
    DatasetManifest { records }.save(&out.join("manifest.csv"))?;
    let id = run_id("degrade", cfg, &input_hashes)?;
    write_json(&out.join("degrade_report.json"), &DegradeReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: id.clone(),
        config: cfg,
        subjects,
        manifest: "manifest.csv",
    })?;
    info!("degrade: {done} degraded, {skipped} resumed");
    sidecar.finish(&id, serde_json::json!({ "degraded": done, "resumed": skipped }))
}
