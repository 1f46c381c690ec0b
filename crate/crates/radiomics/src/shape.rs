//! Mesh- and moment-based 3-D shape descriptors of a binary ROI.

use std::collections::HashSet;

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{RadiomicsError, Result};
use crate::grid::Grid3;

pub const SHAPE_FEATURES: [&str; 14] = [
    "MeshVolume",
    "VoxelVolume",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "Sphericity",
    "Maximum3DDiameter",
    "Maximum2DDiameterSlice",
    "Maximum2DDiameterColumn",
    "Maximum2DDiameterRow",
    "MajorAxisLength",
    "MinorAxisLength",
    "LeastAxisLength",
    "Elongation",
    "Flatness",
];

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Closed, outward-oriented triangle surface of a binary mask.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub triangles: Vec<[P3; 3]>,
    /// Distinct vertex positions (mm).
    pub vertices: Vec<P3>,
}

/// Cube corners (x, y, z offsets) and the six tetrahedra sharing the
/// main diagonal 0–6, which triangulate neighbouring cubes consistently.
const CORNERS: [[i64; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];
const TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 2, 3, 6],
    [0, 3, 7, 6],
    [0, 7, 4, 6],
    [0, 4, 5, 6],
    [0, 5, 1, 6],
];

/// Width (voxels) of the Gaussian used to place vertices along crossing edges.
pub const SURFACE_SMOOTHING_SIGMA: f64 = 0.75;
const SIGMA: f64 = SURFACE_SMOOTHING_SIGMA;
const PAD: i64 = 3;

/// Indicator of `mask` on a grid padded by `PAD` voxels, smoothed by a
/// separable Gaussian.
struct Field {
    dims: [i64; 3],
    values: Vec<f64>,
}

impl Field {
    fn new(mask: &Grid3<bool>, sigma: f64) -> Field {
        let d = mask.dims();
        let dims = [d[0] as i64 + 2 * PAD, d[1] as i64 + 2 * PAD, d[2] as i64 + 2 * PAD];
        let len = (dims[0] * dims[1] * dims[2]) as usize;
        let idx = |p: [i64; 3]| ((p[2] * dims[1] + p[1]) * dims[0] + p[0]) as usize;
        let mut values = vec![0.0; len];
        for (i, &m) in mask.data().iter().enumerate() {
            if m {
                let c = mask.coords(i);
                values[idx([c[0] as i64 + PAD, c[1] as i64 + PAD, c[2] as i64 + PAD])] = 1.0;
            }
        }
        let r = (3.0 * sigma).ceil() as i64;
        let taps: Vec<f64> = {
            let w: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        };
        for axis in 0..3 {
            let mut out = vec![0.0; len];
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        let p = [x, y, z];
                        let mut acc = 0.0;
                        for (t, w) in (-r..=r).zip(&taps) {
                            let mut q = p;
                            q[axis] += t;
                            if q[axis] >= 0 && q[axis] < dims[axis] {
                                acc += w * values[idx(q)];
                            }
                        }
                        out[idx(p)] = acc;
                    }
                }
            }
            values = out;
        }
        Field { dims, values }
    }

    /// Value at mask coordinate `p` (may lie in the padding).
    fn at(&self, p: [i64; 3]) -> f64 {
        let q = [p[0] + PAD, p[1] + PAD, p[2] + PAD];
        self.values[((q[2] * self.dims[1] + q[1]) * self.dims[0] + q[0]) as usize]
    }
}

impl Mesh {
    /// Marching tetrahedra over voxel centres. Inside/outside comes from the
    /// binary mask; on each crossing edge the vertex sits where a Gaussian-
    /// smoothed indicator crosses 1/2 (the edge midpoint when the smoothed
    /// values do not bracket 1/2). Voxels outside the grid are background.
    pub fn from_mask(mask: &Grid3<bool>, spacing: P3) -> Mesh {
        let [nx, ny, nz] = mask.dims();
        let field = Field::new(mask, SIGMA);
        let inside = |p: [i64; 3]| -> bool {
            p.iter().all(|&v| v >= 0)
                && (p[0] as usize) < nx
                && (p[1] as usize) < ny
                && (p[2] as usize) < nz
                && *mask.get(p[0] as usize, p[1] as usize, p[2] as usize)
        };
        let phys = |p: [f64; 3]| -> P3 { [p[0] * spacing[0], p[1] * spacing[1], p[2] * spacing[2]] };
        let mut triangles = Vec::new();
        let mut seen: HashSet<([i64; 3], [i64; 3])> = HashSet::new();
        let mut vertices = Vec::new();
        let mut vertex = |a: [i64; 3], b: [i64; 3]| -> P3 {
            // `a` inside, `b` outside.
            let (fa, fb) = (field.at(a), field.at(b));
            let t = if fa > 0.5 && fb < 0.5 { (fa - 0.5) / (fa - fb) } else { 0.5 };
            let v = phys([
                a[0] as f64 + t * (b[0] - a[0]) as f64,
                a[1] as f64 + t * (b[1] - a[1]) as f64,
                a[2] as f64 + t * (b[2] - a[2]) as f64,
            ]);
            let key = if a < b { (a, b) } else { (b, a) };
            if seen.insert(key) {
                vertices.push(v);
            }
            v
        };
        for z in -1..nz as i64 {
            for y in -1..ny as i64 {
                for x in -1..nx as i64 {
                    let pts: Vec<[i64; 3]> = CORNERS
                        .iter()
                        .map(|c| [x + c[0], y + c[1], z + c[2]])
                        .collect();
                    let flags: Vec<bool> = pts.iter().map(|&p| inside(p)).collect();
                    let n_in = flags.iter().filter(|&&f| f).count();
                    if n_in == 0 || n_in == 8 {
                        continue;
                    }
                    for tet in TETS {
                        let ins: Vec<usize> = tet.iter().copied().filter(|&i| flags[i]).collect();
                        let outs: Vec<usize> = tet.iter().copied().filter(|&i| !flags[i]).collect();
                        if ins.is_empty() || outs.is_empty() {
                            continue;
                        }
                        let centroid = |idx: &[usize]| -> P3 {
                            let mut c = [0.0; 3];
                            for &i in idx {
                                for (a, ca) in c.iter_mut().enumerate() {
                                    *ca += pts[i][a] as f64 / idx.len() as f64;
                                }
                            }
                            phys(c)
                        };
                        let outward = sub(centroid(&outs), centroid(&ins));
                        let mut e = |i: usize, o: usize| vertex(pts[i], pts[o]);
                        let polys: Vec<[P3; 3]> = match (ins.len(), outs.len()) {
                            (1, 3) => vec![[e(ins[0], outs[0]), e(ins[0], outs[1]), e(ins[0], outs[2])]],
                            (3, 1) => vec![[e(ins[0], outs[0]), e(ins[1], outs[0]), e(ins[2], outs[0])]],
                            _ => {
                                let (a, b, c, d) = (ins[0], ins[1], outs[0], outs[1]);
                                let q = [e(a, c), e(a, d), e(b, d), e(b, c)];
                                vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
                            }
                        };
                        for mut t in polys {
                            let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
                            if dot(n, outward) < 0.0 {
                                t.swap(1, 2);
                            }
                            triangles.push(t);
                        }
                    }
                }
            }
        }
        vertices.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Mesh {
            triangles,
            vertices,
        }
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
                0.5 * dot(n, n).sqrt()
            })
            .sum()
    }

    /// Enclosed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| dot(t[0], cross(t[1], t[2])) / 6.0)
            .sum::<f64>()
            .abs()
    }

    /// Largest vertex-to-vertex distance, optionally restricted to pairs
    /// sharing the coordinate on `same_axis`.
    pub fn max_diameter(&self, same_axis: Option<usize>) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if let Some(a) = same_axis {
                    if v[i][a] != v[j][a] {
                        continue;
                    }
                }
                let d = sub(v[i], v[j]);
                best = best.max(dot(d, d));
            }
        }
        best.sqrt()
    }
}

/// Principal-axis variances (descending) of the physical voxel coordinates.
pub fn principal_variances(mask: &Grid3<bool>, spacing: P3) -> [f64; 3] {
    let pts: Vec<P3> = mask
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| {
            let c = mask.coords(i);
            [c[0] as f64 * spacing[0], c[1] as f64 * spacing[1], c[2] as f64 * spacing[2]]
        })
        .collect();
    let n = pts.len();
    if n < 2 {
        return [0.0; 3];
    }
    let mut mean = [0.0; 3];
    for p in &pts {
        for a in 0..3 {
            mean[a] += p[a] / n as f64;
        }
    }
    let mut cov = Matrix3::zeros();
    for p in &pts {
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    cov /= n as f64 - 1.0;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    [ev[0], ev[1], ev[2]]
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// The 14 shape features, in `SHAPE_FEATURES` order.
pub fn shape_features(mask: &Grid3<bool>, spacing: P3) -> Result<Vec<f64>> {
    let count = mask.count();
    if count == 0 {
        return Err(RadiomicsError::EmptyMask);
    }
    let mesh = Mesh::from_mask(mask, spacing);
    let volume = mesh.volume();
    let area = mesh.area();
    let voxel_volume = count as f64 * spacing.iter().product::<f64>();
    let sphericity = ratio((36.0 * std::f64::consts::PI * volume * volume).cbrt(), area);
    let [l1, l2, l3] = principal_variances(mask, spacing);
    Ok(vec![
        volume,
        voxel_volume,
        area,
        ratio(area, volume),
        sphericity,
        mesh.max_diameter(None),
        mesh.max_diameter(Some(2)),
        mesh.max_diameter(Some(1)),
        mesh.max_diameter(Some(0)),
        4.0 * l1.sqrt(),
        4.0 * l2.sqrt(),
        4.0 * l3.sqrt(),
        ratio(l2, l1).sqrt(),
        ratio(l3, l1).sqrt(),
    ])
}
