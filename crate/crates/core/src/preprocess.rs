//! Intensity preprocessing: HU rescale, window clipping, Gaussian smoothing,
//! fixed-window normalization and isotropic resampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{CtVolume, Dims, Geometry, IntensityUnit, NoduleMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub hu_slope: f64,
    pub hu_intercept: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub gaussian_kernel: [usize; 3],
    pub gaussian_sigma: f64,
    pub target_spacing: [f64; 3],
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            hu_slope: 1.0,
            hu_intercept: -1024.0,
            window_lo: -1200.0,
            window_hi: 600.0,
            gaussian_kernel: [3, 3, 3],
            gaussian_sigma: 0.5,
            target_spacing: [1.0, 1.0, 1.0],
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_lo < self.window_hi) {
            return Err(Error::Param(format!(
                "window [{}, {}] is empty",
                self.window_lo, self.window_hi
            )));
        }
        if !(self.gaussian_sigma > 0.0) {
            return Err(Error::Param("gaussian_sigma must be > 0".into()));
        }
        if self.gaussian_kernel.iter().any(|k| k % 2 == 0) {
            return Err(Error::Param("gaussian kernel dims must be odd".into()));
        }
        if self.target_spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Param("target spacing must be > 0".into()));
        }
        Ok(())
    }
}

fn require_unit(v: &CtVolume, unit: IntensityUnit) -> Result<()> {
    if v.unit() != unit {
        return Err(Error::Unit {
            expected: unit,
            found: v.unit(),
        });
    }
    Ok(())
}

pub fn hu_convert(v: &CtVolume, slope: f64, intercept: f64) -> Result<CtVolume> {
    require_unit(v, IntensityUnit::RawDicom)?;
    let values = v
        .values()
        .iter()
        .map(|&x| (slope * x as f64 + intercept) as f32)
        .collect();
    Ok(v.with_values(values, IntensityUnit::Hu))
}

pub fn clip_window(v: &CtVolume, lo: f64, hi: f64) -> Result<CtVolume> {
    require_unit(v, IntensityUnit::Hu)?;
    if !(lo < hi) {
        return Err(Error::Param(format!("window [{lo}, {hi}] is empty")));
    }
    let (lo, hi) = (lo as f32, hi as f32);
    let values = v.values().iter().map(|&x| x.clamp(lo, hi)).collect();
    Ok(v.with_values(values, IntensityUnit::Hu))
}

/// Normalized 1-D Gaussian taps of odd length `size`.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as isize;
    let g: Vec<f64> = (-half..=half)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|w| w / s).collect()
}

fn convolve_axis(values: &[f32], dims: Dims, axis: usize, taps: &[f64]) -> Vec<f32> {
    let half = (taps.len() / 2) as isize;
    let n_axis = dims.as_array()[axis] as isize;
    let mut out = vec![0.0f32; values.len()];
    out.par_chunks_mut(dims.slice_len())
        .enumerate()
        .for_each(|(z, slice)| {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    let pos = [x as isize, y as isize, z as isize];
                    let mut acc = 0.0f64;
                    for (t, w) in taps.iter().enumerate() {
                        let mut p = pos;
                        p[axis] = (pos[axis] + t as isize - half).clamp(0, n_axis - 1);
                        acc += w * values[dims.index(p[0] as usize, p[1] as usize, p[2] as usize)]
                            as f64;
                    }
                    slice[y * dims.nx + x] = acc as f32;
                }
            }
        });
    out
}

/// Separable Gaussian filter with edge replication. Marks the result as smoothed.
pub fn gaussian_smooth_3d(v: &CtVolume, cfg: &PreprocessConfig) -> Result<CtVolume> {
    if !(cfg.gaussian_sigma > 0.0) || cfg.gaussian_kernel.iter().any(|k| k % 2 == 0) {
        return Err(Error::Param(
            "gaussian filter needs odd kernel dims and sigma > 0".into(),
        ));
    }
    let dims = v.dims();
    let mut values = v.values().to_vec();
    for axis in 0..3 {
        let taps = gaussian_taps(cfg.gaussian_kernel[axis], cfg.gaussian_sigma);
        values = convolve_axis(&values, dims, axis, &taps);
    }
    let mut out = v.with_values(values, v.unit());
    out.set_smoothed(true);
    Ok(out)
}

/// Fixed affine map of the clip window onto [0, 1].
pub fn normalize_unit(v: &CtVolume, window_lo: f64, window_hi: f64) -> Result<CtVolume> {
    require_unit(v, IntensityUnit::Hu)?;
    if !(window_lo < window_hi) {
        return Err(Error::Param("degenerate normalization window".into()));
    }
    let width = window_hi - window_lo;
    let values = v
        .values()
        .iter()
        .map(|&x| (((x as f64 - window_lo) / width) as f32).clamp(0.0, 1.0))
        .collect();
    Ok(v.with_values(values, IntensityUnit::Normalized))
}

/// Full intensity chain: (rescale) → clip → smooth once → normalize.
pub fn preprocess(v: &CtVolume, cfg: &PreprocessConfig) -> Result<CtVolume> {
    cfg.validate()?;
    let hu = match v.unit() {
        IntensityUnit::RawDicom => hu_convert(v, cfg.hu_slope, cfg.hu_intercept)?,
        IntensityUnit::Hu => v.clone(),
        IntensityUnit::Normalized => {
            return Err(Error::Unit {
                expected: IntensityUnit::Hu,
                found: IntensityUnit::Normalized,
            })
        }
    };
    let clipped = clip_window(&hu, cfg.window_lo, cfg.window_hi)?;
    let smoothed = if clipped.is_smoothed() {
        clipped
    } else {
        gaussian_smooth_3d(&clipped, cfg)?
    };
    normalize_unit(&smoothed, cfg.window_lo, cfg.window_hi)
}

/// Keys cubic convolution kernel (a = -0.5).
#[inline]
fn cubic_weight(s: f64) -> f64 {
    const A: f64 = -0.5;
    let s = s.abs();
    if s <= 1.0 {
        (A + 2.0) * s * s * s - (A + 3.0) * s * s + 1.0
    } else if s < 2.0 {
        A * s * s * s - 5.0 * A * s * s + 8.0 * A * s - 4.0 * A
    } else {
        0.0
    }
}

fn resampled_dims(dims: Dims, spacing: [f64; 3], target: [f64; 3]) -> Dims {
    let n = |i: usize| -> usize {
        let d = dims.as_array()[i] as f64 * spacing[i] / target[i];
        (d.round() as usize).max(1)
    };
    Dims::new(n(0), n(1), n(2))
}

fn resample_axis_cubic(values: &[f64], dims: Dims, axis: usize, new_len: usize, step: f64) -> (Vec<f64>, Dims) {
    let mut out_dims = dims.as_array();
    out_dims[axis] = new_len;
    let od = Dims::new(out_dims[0], out_dims[1], out_dims[2]);
    let n_in = dims.as_array()[axis] as isize;
    // Precompute taps per output position along the axis.
    let taps: Vec<([usize; 4], [f64; 4])> = (0..new_len)
        .map(|i| {
            let c = i as f64 * step;
            let base = c.floor() as isize;
            let mut idx = [0usize; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                let j = base - 1 + k as isize;
                idx[k] = j.clamp(0, n_in - 1) as usize;
                w[k] = cubic_weight(c - j as f64);
            }
            (idx, w)
        })
        .collect();
    let mut out = vec![0.0f64; od.len()];
    out.par_chunks_mut(od.slice_len())
        .enumerate()
        .for_each(|(z, slice)| {
            for y in 0..od.ny {
                for x in 0..od.nx {
                    let p = [x, y, z];
                    let (idx, w) = &taps[p[axis]];
                    let mut acc = 0.0;
                    for k in 0..4 {
                        let mut q = p;
                        q[axis] = idx[k];
                        acc += w[k] * values[dims.index(q[0], q[1], q[2])];
                    }
                    slice[y * od.nx + x] = acc;
                }
            }
        });
    (out, od)
}

/// Tri-cubic resampling onto `target` spacing. The first voxel center stays in place.
pub fn resample_isotropic(v: &CtVolume, target: [f64; 3]) -> Result<CtVolume> {
    if target.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Param("target spacing must be > 0".into()));
    }
    let spacing = v.spacing();
    if spacing == target {
        return Ok(v.clone());
    }
    let out_dims = resampled_dims(v.dims(), spacing, target);
    let mut values: Vec<f64> = v.values().iter().map(|&x| x as f64).collect();
    let mut dims = v.dims();
    for axis in 0..3 {
        let (vals, d) = resample_axis_cubic(
            &values,
            dims,
            axis,
            out_dims.as_array()[axis],
            target[axis] / spacing[axis],
        );
        values = vals;
        dims = d;
    }
    let mut vals32: Vec<f32> = values.into_iter().map(|x| x as f32).collect();
    if v.unit() == IntensityUnit::Normalized {
        for x in &mut vals32 {
            *x = x.clamp(0.0, 1.0);
        }
    }
    let geometry = Geometry::new(out_dims, target, v.origin())?;
    let mut out = CtVolume::new(geometry, vals32, v.unit())?;
    out.set_smoothed(v.is_smoothed());
    Ok(out)
}

/// Nearest-neighbor resampling of a mask onto `target` spacing.
pub fn resample_mask(m: &NoduleMask, target: [f64; 3]) -> Result<NoduleMask> {
    if target.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Param("target spacing must be > 0".into()));
    }
    let g = m.geometry();
    if g.spacing == target {
        return Ok(m.clone());
    }
    let out_dims = resampled_dims(g.dims, g.spacing, target);
    let src = |i: usize, axis: usize| -> usize {
        let c = (i as f64 * target[axis] / g.spacing[axis]).round() as usize;
        c.min(g.dims.as_array()[axis] - 1)
    };
    let mut values = Vec::with_capacity(out_dims.len());
    for z in 0..out_dims.nz {
        for y in 0..out_dims.ny {
            for x in 0..out_dims.nx {
                values.push(m.values()[g.dims.index(src(x, 0), src(y, 1), src(z, 2))]);
            }
        }
    }
    let geometry = Geometry::new(out_dims, target, g.origin)?;
    NoduleMask::new(geometry, values, m.nodule_id(), m.malignancy_score())
}
