//! ROI perturbations: volume-targeted dilation and erosion, and random
//! contour noise followed by largest-component cleanup.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RadiomicsError, Result};
use crate::grid::{neighbors_26, Grid3, NEIGHBORS_6};

/// Boundary flip probability for contour noise.
pub const CONTOUR_FLIP_PROBABILITY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    Dilate,
    Erode,
    ContourNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub mode: PerturbMode,
    /// Target relative volume change for dilate/erode.
    pub magnitude: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(mode: PerturbMode, magnitude: f64, seed: u64) -> Result<Self> {
        if !(magnitude > 0.0 && magnitude < 0.5) {
            return Err(RadiomicsError::Param(format!(
                "perturbation magnitude {magnitude} outside (0, 0.5)"
            )));
        }
        Ok(PerturbationSpec { mode, magnitude, seed })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed {
    pub mask: Grid3<bool>,
    /// Morphological steps applied (0 for contour noise).
    pub steps: usize,
    /// Set when the target could not be reached (erosion stopped before
    /// emptying the mask, or dilation filled the grid).
    pub truncated: bool,
}

fn step(mask: &Grid3<bool>, grow: bool) -> Grid3<bool> {
    let data = mask.data();
    Grid3::from_vec(
        mask.dims(),
        (0..mask.len())
            .map(|i| {
                let p = mask.coords(i);
                if data[i] == grow {
                    return grow;
                }
                // Dilation turns on any voxel with a set 6-neighbour; erosion
                // clears any voxel with an unset (or out-of-grid) 6-neighbour.
                let hit = NEIGHBORS_6.iter().any(|&d| match mask.offset(p, d) {
                    Some(q) => data[q] == grow,
                    None => !grow,
                });
                if hit {
                    grow
                } else {
                    data[i]
                }
            })
            .collect(),
    )
}

fn morph(mask: &Grid3<bool>, grow: bool, target: f64) -> Perturbed {
    let v0 = mask.count() as f64;
    let mut cur = mask.clone();
    let mut steps = 0;
    loop {
        let next = step(&cur, grow);
        let n = next.count();
        if n == 0 || next == cur {
            return Perturbed { mask: cur, steps, truncated: true };
        }
        cur = next;
        steps += 1;
        if (n as f64 - v0).abs() / v0 >= target {
            return Perturbed { mask: cur, steps, truncated: false };
        }
    }
}

/// Voxels on either side of the 6-connected mask boundary.
fn boundary(mask: &Grid3<bool>) -> Vec<usize> {
    let data = mask.data();
    (0..mask.len())
        .filter(|&i| {
            let p = mask.coords(i);
            NEIGHBORS_6.iter().any(|&d| match mask.offset(p, d) {
                Some(q) => data[q] != data[i],
                None => data[i],
            })
        })
        .collect()
}

/// Largest 26-connected component; ties keep the one found first in
/// raster order.
pub fn largest_component(mask: &Grid3<bool>) -> Grid3<bool> {
    let offsets: Vec<[isize; 3]> = neighbors_26().collect();
    let data = mask.data();
    let mut label = vec![0usize; mask.len()];
    let mut best = (0usize, 0usize);
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..mask.len() {
        if !data[s] || label[s] != 0 {
            continue;
        }
        next += 1;
        label[s] = next;
        stack.push(s);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let p = mask.coords(i);
            for &d in &offsets {
                if let Some(q) = mask.offset(p, d) {
                    if data[q] && label[q] == 0 {
                        label[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
        if size > best.1 {
            best = (next, size);
        }
    }
    Grid3::from_vec(mask.dims(), label.iter().map(|&l| l != 0 && l == best.0).collect())
}

pub fn perturb_roi(mask: &Grid3<bool>, spec: &PerturbationSpec) -> Result<Perturbed> {
    if mask.count() == 0 {
        return Err(RadiomicsError::EmptyMask);
    }
    Ok(match spec.mode {
        PerturbMode::Dilate => morph(mask, true, spec.magnitude),
        PerturbMode::Erode => morph(mask, false, spec.magnitude),
        PerturbMode::ContourNoise => {
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            let mut out = mask.clone();
            for i in boundary(mask) {
                if rng.random_bool(CONTOUR_FLIP_PROBABILITY) {
                    out.data_mut()[i] = !mask.data()[i];
                }
            }
            let cleaned = largest_component(&out);
            if cleaned.count() == 0 {
                Perturbed { mask: mask.clone(), steps: 0, truncated: true }
            } else {
                Perturbed { mask: cleaned, steps: 0, truncated: false }
            }
        }
    })
}
