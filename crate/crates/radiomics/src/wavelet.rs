//! One-level separable 3-D Haar decomposition and mask downsampling.

use crate::grid::Grid3;

/// Sub-band names in output order; letters give the filter along x, y, z.
pub const BANDS: [&str; 8] = ["LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH"];

/// Haar low/high split along one axis. Odd lengths repeat the last sample
/// (symmetric extension), so the output length is `ceil(n / 2)`.
fn split_axis(g: &Grid3<f64>, axis: usize) -> (Grid3<f64>, Grid3<f64>) {
    let d = g.dims();
    let mut od = d;
    od[axis] = d[axis].div_ceil(2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pair = |x: usize, y: usize, z: usize| {
        let mut p = [x, y, z];
        p[axis] *= 2;
        let a = *g.get(p[0], p[1], p[2]);
        p[axis] = (p[axis] + 1).min(d[axis] - 1);
        let b = *g.get(p[0], p[1], p[2]);
        (a, b)
    };
    let lo = Grid3::from_fn(od, |x, y, z| {
        let (a, b) = pair(x, y, z);
        s * (a + b)
    });
    let hi = Grid3::from_fn(od, |x, y, z| {
        let (a, b) = pair(x, y, z);
        s * (a - b)
    });
    (lo, hi)
}

/// The eight sub-bands at half resolution, ordered as [`BANDS`].
pub fn wavelet_decompose(g: &Grid3<f64>) -> Vec<Grid3<f64>> {
    let mut bands = vec![g.clone()];
    for axis in 0..3 {
        bands = bands
            .iter()
            .flat_map(|b| {
                let (l, h) = split_axis(b, axis);
                [l, h]
            })
            .collect();
    }
    bands
}

/// Nearest-neighbour mask downsampling onto the sub-band grid (voxel `i`
/// takes input voxel `2i`). Falls back to any-of-block pooling when the
/// sampled mask would be empty.
pub fn downsample_mask(mask: &Grid3<bool>) -> Grid3<bool> {
    let d = mask.dims();
    let od = [d[0].div_ceil(2), d[1].div_ceil(2), d[2].div_ceil(2)];
    let sampled = Grid3::from_fn(od, |x, y, z| *mask.get(2 * x, 2 * y, 2 * z));
    if sampled.count() > 0 {
        return sampled;
    }
    Grid3::from_fn(od, |x, y, z| {
        (0..8).any(|k| {
            let p = [2 * x + (k & 1), 2 * y + ((k >> 1) & 1), 2 * z + (k >> 2)];
            p.iter().zip(&d).all(|(v, n)| v < n) && *mask.get(p[0], p[1], p[2])
        })
    })
}
