//! Paired (MAE, SSIM, MS-SSIM) and distributional (FID, KID) comparison of
//! two datasets over center-cropped slice patches.

use std::path::Path;

use dosesim_core::io::{load_volume, DatasetManifest};
use dosesim_core::metrics::{
    center_crop_patches, embed_patches, fid, gaussian_stats, kid, mae, ms_ssim, ssim, Embedder, HandcraftedEmbedder, PatchSet,
    MS_SSIM_WEIGHTS,
};
use dosesim_core::rng::RngStream;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::MetricsConfig;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, run_id, sha256_file, write_json, Sidecar, REPORT_SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub run_id: String,
    pub mae: f64,
    pub ssim: f64,
    pub ms_ssim: f64,
    pub fid: f64,
    pub kid_mean: f64,
    pub kid_std: f64,
    pub n_patches: usize,
    pub embedder_id: String,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn run(real_path: &Path, generated_path: &Path, cfg: &MetricsConfig, seed: u64, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let sidecar = Sidecar::start(out, "metrics");
    let real = DatasetManifest::load(real_path)?;
    let generated = DatasetManifest::load(generated_path)?;
    for r in &generated.records {
        if real.get(&r.subject_id).is_none() {
            return Err(CliError::Data(format!("generated subject {} has no real counterpart", r.subject_id)));
        }
    }
    for r in &real.records {
        if generated.get(&r.subject_id).is_none() {
            return Err(CliError::Data(format!("real subject {} has no generated counterpart", r.subject_id)));
        }
    }
    let window = (cfg.window[0], cfg.window[1]);
    let pairs: Vec<(PatchSet, PatchSet, String, String)> = real
        .records
        .par_iter()
        .map(|r| {
            let g = generated.get(&r.subject_id).expect("paired above");
            let (a, b) = (load_volume(&r.volume_path)?, load_volume(&g.volume_path)?);
            if a.dims() != b.dims() {
                return Err(CliError::Data(format!("subject {}: volume dims differ between datasets", r.subject_id)));
            }
            Ok((
                center_crop_patches(&a, cfg.patch_size, window, &r.subject_id)?,
                center_crop_patches(&b, cfg.patch_size, window, &r.subject_id)?,
                sha256_file(&r.volume_path)?,
                sha256_file(&g.volume_path)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut real_set = PatchSet::new(cfg.patch_size);
    let mut gen_set = PatchSet::new(cfg.patch_size);
    let mut hashes = Vec::new();
    for (a, b, ha, hb) in pairs {
        real_set.extend(a)?;
        gen_set.extend(b)?;
        hashes.push(ha);
        hashes.push(hb);
    }
    if real_set.len() < 2 {
        return Err(CliError::Data("metrics need at least two patches".into()));
    }
    let paired: Vec<[f64; 3]> = real_set
        .patches
        .par_iter()
        .zip(&gen_set.patches)
        .map(|(a, b)| {
            Ok([
                mae(a, b)?,
                ssim(a, b, &cfg.ssim)?,
                ms_ssim(a, b, cfg.ms_ssim_scales, &MS_SSIM_WEIGHTS, &cfg.ssim)?,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| paired.iter().map(|v| v[k]).collect::<Vec<_>>();
    let embedder = HandcraftedEmbedder::default();
    let e_real = embed_patches(&real_set, &embedder)?;
    let e_gen = embed_patches(&gen_set, &embedder)?;
    let fid_value = fid(&gaussian_stats(&e_real)?, &gaussian_stats(&e_gen)?)?;
    let k = kid(&e_real, &e_gen, cfg.kid_subset_size, cfg.kid_subsets, &mut RngStream::new(seed).substream("kid", 0).rng())?;
    let id = run_id("metrics", &(cfg, seed), &hashes)?;
    let report = MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: id.clone(),
        mae: mean(&col(0)),
        ssim: mean(&col(1)),
        ms_ssim: mean(&col(2)),
        fid: fid_value,
        kid_mean: k.mean,
        kid_std: k.std,
        n_patches: real_set.len(),
        embedder_id: embedder.id(),
    };
    if [report.mae, report.ssim, report.ms_ssim, report.fid, report.kid_mean, report.kid_std].iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numerical("non-finite metric".into()));
    }
    write_json(&out.join("metrics.json"), &report)?;
    info!("metrics: {} patches, FID {:.4}, KID {:.4}", report.n_patches, report.fid, report.kid_mean);
    sidecar.finish(&id, serde_json::Value::Null)
}
