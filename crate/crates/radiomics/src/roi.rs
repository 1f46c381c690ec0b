//! ROI containers, whole-patch Z-scoring and fixed-bin-count discretization.

use crate::error::{RadiomicsError, Result};
use crate::grid::Grid3;

/// Image patch and congruent binary mask on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    pub image: Grid3<f64>,
    pub mask: Grid3<bool>,
    /// Voxel spacing in mm along (x, y, z).
    pub spacing: [f64; 3],
}

impl Roi {
    pub fn new(image: Grid3<f64>, mask: Grid3<bool>, spacing: [f64; 3]) -> Result<Self> {
        if image.dims() != mask.dims() {
            return Err(RadiomicsError::Shape(format!(
                "image {:?} vs mask {:?}",
                image.dims(),
                mask.dims()
            )));
        }
        if mask.count() == 0 {
            return Err(RadiomicsError::EmptyMask);
        }
        if spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(RadiomicsError::Param("spacing must be positive".into()));
        }
        if image.data().iter().any(|v| !v.is_finite()) {
            return Err(RadiomicsError::Degenerate("image holds non-finite values".into()));
        }
        Ok(Roi {
            image,
            mask,
            spacing,
        })
    }

    pub fn masked_values(&self) -> Vec<f64> {
        self.image
            .data()
            .iter()
            .zip(self.mask.data())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// `(x - mean) / std` with statistics over the whole patch (population std).
pub fn zscore_normalize(image: &Grid3<f64>) -> Result<Grid3<f64>> {
    let n = image.len();
    if n == 0 {
        return Err(RadiomicsError::Degenerate("empty patch".into()));
    }
    let mean = image.data().iter().sum::<f64>() / n as f64;
    let var = image.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if !(std > 0.0) || !std.is_finite() {
        return Err(RadiomicsError::Degenerate("patch has zero standard deviation".into()));
    }
    Ok(image.map(|v| (v - mean) / std))
}

/// Gray levels `1..=bins` on mask voxels (0 outside the mask).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    pub levels: Grid3<u8>,
    pub bins: usize,
}

impl LevelGrid {
    pub fn new(levels: Grid3<u8>, bins: usize) -> Result<Self> {
        if bins == 0 || bins > 255 {
            return Err(RadiomicsError::Param(format!("bin count {bins} outside 1..=255")));
        }
        if levels.data().iter().any(|&l| l as usize > bins) {
            return Err(RadiomicsError::Param("level above bin count".into()));
        }
        if levels.data().iter().all(|&l| l == 0) {
            return Err(RadiomicsError::EmptyMask);
        }
        Ok(LevelGrid { levels, bins })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.levels.dims()
    }

    pub fn voxel_count(&self) -> usize {
        self.levels.data().iter().filter(|&&l| l > 0).count()
    }
}

/// `min(bins, floor(bins·(x - min)/(max - min)) + 1)` over masked voxels;
/// a constant ROI maps to level 1 everywhere.
pub fn discretize_fixed_bins(roi: &Roi, bins: usize) -> Result<LevelGrid> {
    if bins == 0 || bins > 255 {
        return Err(RadiomicsError::Param(format!("bin count {bins} outside 1..=255")));
    }
    let vals = roi.masked_values();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let b = bins as f64;
    let levels = Grid3::from_vec(
        roi.image.dims(),
        roi.image
            .data()
            .iter()
            .zip(roi.mask.data())
            .map(|(&v, &m)| {
                if !m {
                    0
                } else if range > 0.0 {
                    ((b * (v - lo) / range).floor() as usize + 1).min(bins) as u8
                } else {
                    1
                }
            })
            .collect(),
    );
    LevelGrid::new(levels, bins)
}
