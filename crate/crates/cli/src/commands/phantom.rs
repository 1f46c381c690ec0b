//! Synthetic thorax dataset: volumes, nodule masks and a manifest.

use std::path::{Path, PathBuf};

use dosesim_core::io::{save_mask, save_volume, DatasetManifest, DoseClass, ManifestRecord};
use dosesim_core::phantom::{generate_phantom, random_dataset, DatasetSpec};
use dosesim_core::NoduleLabel;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::derived_seed;
use crate::error::Result;
use crate::output::{ensure_dir, run_id, write_json, Sidecar, REPORT_SCHEMA_VERSION};

/// Tube current recorded for synthetic standard-dose scans.
pub const PHANTOM_TUBE_CURRENT_MA: f64 = 200.0;

#[derive(Debug, Serialize)]
struct PhantomReport<'a> {
    schema_version: u32,
    run_id: String,
    seed: u64,
    spec: &'a DatasetSpec,
    n_subjects: usize,
    n_nodules: usize,
    n_malignant: usize,
    n_non_malignant: usize,
    n_indeterminate: usize,
    manifest: &'a str,
}

pub fn run(spec: &DatasetSpec, seed: u64, out: &Path) -> Result<()> {
    let sidecar = Sidecar::start(out, "phantom");
    let id = run_id("phantom", &(spec, seed), &[])?;
    ensure_dir(&out.join("volumes"))?;
    ensure_dir(&out.join("masks"))?;
    let subjects = random_dataset(spec, seed)?;
    let records: Vec<(ManifestRecord, Vec<Option<NoduleLabel>>)> = subjects
        .par_iter()
        .map(|(subject, ps)| {
            let (volume, masks) = generate_phantom(ps, derived_seed(seed, subject))?;
            let volume_path = PathBuf::from("volumes").join(format!("{subject}.mha"));
            save_volume(&volume, &out.join(&volume_path))?;
            let mut mask_paths = Vec::with_capacity(masks.len());
            let mut labels = Vec::with_capacity(masks.len());
            for m in &masks {
                let p = PathBuf::from("masks").join(format!("{}.mha", m.nodule_id()));
                save_mask(m, &out.join(&p))?;
                mask_paths.push(out.join(p));
                labels.push(m.label());
            }
            info!("phantom {subject}: {} nodules", masks.len());
            let rec = ManifestRecord {
                subject_id: subject.clone(),
                volume_path: out.join(volume_path),
                mask_paths,
                dose_class: DoseClass::Sdct,
                tube_current_ma: PHANTOM_TUBE_CURRENT_MA,
            };
            Ok((rec, labels))
        })
        .collect::<Result<_>>()?;
    let count = |want: Option<NoduleLabel>| records.iter().flat_map(|(_, l)| l).filter(|l| **l == want).count();
    let manifest = DatasetManifest { records: records.iter().map(|(r, _)| r.clone()).collect() };
    manifest.save(&out.join("manifest.csv"))?;
    let report = PhantomReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: id.clone(),
        seed,
        spec,
        n_subjects: records.len(),
        n_nodules: records.iter().map(|(_, l)| l.len()).sum(),
        n_malignant: count(Some(NoduleLabel::Malignant)),
        n_non_malignant: count(Some(NoduleLabel::NonMalignant)),
        n_indeterminate: count(None),
        manifest: "manifest.csv",
    };
    write_json(&out.join("phantom_report.json"), &report)?;
    info!("phantom: {} subjects, {} nodules", report.n_subjects, report.n_nodules);
    sidecar.finish(&id, serde_json::Value::Null)
}
