//! Full extraction: crop and resample around the nodule, Z-score, then
//! shape features on the original mask and intensity/texture features on
//! the original image and each Haar sub-band.

use dosesim_core::preprocess::{resample_isotropic, resample_mask};
use dosesim_core::{CtVolume, Dims, Geometry, NoduleMask};
use serde::{Deserialize, Serialize};

use crate::error::{RadiomicsError, Result};
use crate::firstorder::{firstorder_features, FIRSTORDER_FEATURES};
use crate::glcm::{glcm_features, GLCM_FEATURES};
use crate::gldm::{gldm_features, GLDM_FEATURES};
use crate::glrlm::{glrlm_features, GLRLM_FEATURES};
use crate::glszm::{glszm_features, GLSZM_FEATURES};
use crate::grid::Grid3;
use crate::ngtdm::{ngtdm_features, NGTDM_FEATURES};
use crate::perturb::{perturb_roi, PerturbationSpec};
use crate::roi::{discretize_fixed_bins, zscore_normalize, Roi};
use crate::shape::{shape_features, SHAPE_FEATURES};
use crate::wavelet::{downsample_mask, wavelet_decompose, BANDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub bins: usize,
    /// Isotropic voxel size (mm) before extraction.
    pub spacing_mm: f64,
    /// Voxels kept around the mask bounding box.
    pub margin: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            bins: 32,
            spacing_mm: 1.0,
            margin: 4,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.bins > 255 {
            return Err(RadiomicsError::Param(format!("bins {} outside 1..=255", self.bins)));
        }
        if !(self.spacing_mm > 0.0 && self.spacing_mm.is_finite()) {
            return Err(RadiomicsError::Param("spacing must be positive".into()));
        }
        Ok(())
    }
}

/// Feature names and values in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

type Family = (&'static str, &'static [&'static str]);

const INTENSITY_FAMILIES: [Family; 6] = [
    ("firstorder", &FIRSTORDER_FEATURES),
    ("glcm", &GLCM_FEATURES),
    ("glrlm", &GLRLM_FEATURES),
    ("glszm", &GLSZM_FEATURES),
    ("ngtdm", &NGTDM_FEATURES),
    ("gldm", &GLDM_FEATURES),
];

pub fn filter_names() -> Vec<String> {
    std::iter::once("original".to_string())
        .chain(BANDS.iter().map(|b| format!("wavelet-{b}")))
        .collect()
}

/// `<filter>_<class>_<feature>` names in extraction order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = SHAPE_FEATURES.iter().map(|f| format!("original_shape_{f}")).collect();
    for filter in filter_names() {
        for (class, feats) in INTENSITY_FAMILIES {
            names.extend(feats.iter().map(|f| format!("{filter}_{class}_{f}")));
        }
    }
    names
}

fn intensity_features(roi: &Roi, bins: usize, out: &mut Vec<f64>) -> Result<()> {
    let lv = discretize_fixed_bins(roi, bins)?;
    out.extend(firstorder_features(roi, &lv)?);
    out.extend(glcm_features(&lv));
    out.extend(glrlm_features(&lv));
    out.extend(glszm_features(&lv));
    out.extend(ngtdm_features(&lv));
    out.extend(gldm_features(&lv));
    Ok(())
}

/// Features of a ROI whose image is not yet normalized. Z-scoring uses the
/// whole patch.
pub fn extract_roi(roi: &Roi, cfg: &ExtractionConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let image = zscore_normalize(&roi.image)?;
    let mut values = shape_features(&roi.mask, roi.spacing)?;
    intensity_features(&Roi::new(image.clone(), roi.mask.clone(), roi.spacing)?, cfg.bins, &mut values)?;
    let band_mask = downsample_mask(&roi.mask);
    let band_spacing = roi.spacing.map(|s| 2.0 * s);
    for band in wavelet_decompose(&image) {
        let r = Roi::new(band, band_mask.clone(), band_spacing)?;
        intensity_features(&r, cfg.bins, &mut values)?;
    }
    let names = feature_names();
    debug_assert_eq!(names.len(), values.len());
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(RadiomicsError::Degenerate(format!("feature {} is not finite", names[i])));
    }
    Ok(FeatureVector { names, values })
}

/// Box `[lo - margin, hi + margin]` around the mask; out-of-volume samples
/// repeat the nearest edge voxel, so the crop only depends on the nodule's
/// neighbourhood.
fn crop_box(lo: [usize; 3], hi: [usize; 3], margin: usize) -> ([isize; 3], [usize; 3]) {
    let start = lo.map(|v| v as isize - margin as isize);
    let size = [0, 1, 2].map(|a| hi[a] - lo[a] + 1 + 2 * margin);
    (start, size)
}

fn sample<T: Copy>(dims: Dims, values: &[T], start: [isize; 3], size: [usize; 3]) -> Vec<T> {
    let d = dims.as_array();
    let clamp = |v: isize, a: usize| v.clamp(0, d[a] as isize - 1) as usize;
    let mut out = Vec::with_capacity(size.iter().product());
    for z in 0..size[2] {
        let sz = clamp(start[2] + z as isize, 2);
        for y in 0..size[1] {
            let sy = clamp(start[1] + y as isize, 1);
            for x in 0..size[0] {
                out.push(values[dims.index(clamp(start[0] + x as isize, 0), sy, sz)]);
            }
        }
    }
    out
}

/// Crops a volume/mask pair around the nodule, resampled to the configured
/// isotropic spacing.
pub fn nodule_roi(volume: &CtVolume, mask: &NoduleMask, cfg: &ExtractionConfig) -> Result<Roi> {
    cfg.validate()?;
    if !mask.matches(volume) {
        return Err(RadiomicsError::Shape("mask geometry differs from volume".into()));
    }
    let target = [cfg.spacing_mm; 3];
    let spacing = volume.spacing();
    let (vals, mvals, dims) = if spacing == target {
        let (lo, hi) = mask.bounding_box();
        let (start, size) = crop_box(lo, hi, cfg.margin);
        (
            sample(volume.dims(), volume.values(), start, size),
            sample(mask.dims(), mask.values(), start, size),
            size,
        )
    } else {
        // Coarse crop with room for the resampling kernel, then resample
        // and crop again on the target grid.
        let (lo, hi) = mask.bounding_box();
        let pad = [0, 1, 2].map(|a| (cfg.margin as f64 * target[a] / spacing[a]).ceil() as usize + 3);
        let start = [0, 1, 2].map(|a| lo[a] as isize - pad[a] as isize);
        let size = [0, 1, 2].map(|a| hi[a] - lo[a] + 1 + 2 * pad[a]);
        let geom = Geometry::new(Dims::new(size[0], size[1], size[2]), spacing, volume.origin())?;
        let sub_v = CtVolume::new(geom.clone(), sample(volume.dims(), volume.values(), start, size), volume.unit())?;
        let sub_m = NoduleMask::new(geom, sample(mask.dims(), mask.values(), start, size), mask.nodule_id(), mask.malignancy_score())?;
        let rv = resample_isotropic(&sub_v, target)?;
        let rm = resample_mask(&sub_m, target)?;
        let (lo, hi) = rm.bounding_box();
        let (start, size) = crop_box(lo, hi, cfg.margin);
        (sample(rv.dims(), rv.values(), start, size), sample(rm.dims(), rm.values(), start, size), size)
    };
    let image = Grid3::from_vec(dims, vals.into_iter().map(f64::from).collect());
    let mask = Grid3::from_vec(dims, mvals.into_iter().map(|v| v == 1).collect());
    Roi::new(image, mask, target)
}

/// Crop, optionally perturb the mask, and extract all features.
pub fn extract_all(
    volume: &CtVolume,
    mask: &NoduleMask,
    cfg: &ExtractionConfig,
    perturbation: Option<&PerturbationSpec>,
) -> Result<FeatureVector> {
    let mut roi = nodule_roi(volume, mask, cfg)?;
    if let Some(spec) = perturbation {
        let p = perturb_roi(&roi.mask, spec)?;
        if p.truncated {
            log::warn!("perturbation {:?} of nodule {} stopped early", spec.mode, mask.nodule_id());
        }
        roi.mask = p.mask;
    }
    extract_roi(&roi, cfg)
}
