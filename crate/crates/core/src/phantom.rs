//! Synthetic phantoms: the 2-D Shepp-Logan head and a seeded thorax slab
//! with labelled nodules for end-to-end runs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image2;
use crate::rng::RngStream;
use crate::volume::{CtVolume, Dims, Geometry, IntensityUnit, NoduleMask};

/// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees),
/// in coordinates normalized to [-1, 1].
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (2.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.98, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.02, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.02, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.01, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.01, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.01, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.01, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.01, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.01, 0.023, 0.046, 0.06, -0.605, 0.0),
];

const MODIFIED_INTENSITY: [f64; 10] = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];

/// Shepp-Logan head phantom on an `n`×`n` grid. Each pixel averages a
/// `supersample`² grid of point samples (1 = pixel centers only).
/// `modified` selects the higher-contrast intensity set.
pub fn shepp_logan(n: usize, modified: bool, supersample: usize) -> Image2 {
    let ss = supersample.max(1);
    let c = (n as f64 - 1.0) / 2.0;
    let half = n as f64 / 2.0;
    let at = |x: f64, y: f64| {
        let mut v = 0.0;
        for (k, &(amp, a, b, x0, y0, phi)) in SHEPP_LOGAN.iter().enumerate() {
            let (s, co) = phi.to_radians().sin_cos();
            let dx = x - x0;
            let dy = y - y0;
            let u = dx * co + dy * s;
            let w = -dx * s + dy * co;
            if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                v += if modified { MODIFIED_INTENSITY[k] } else { amp };
            }
        }
        v
    };
    Image2::from_fn(n, n, |row, col| {
        let mut sum = 0.0;
        for si in 0..ss {
            for sj in 0..ss {
                let dr = (si as f64 + 0.5) / ss as f64 - 0.5;
                let dc = (sj as f64 + 0.5) / ss as f64 - 0.5;
                let x = (col as f64 + dc - c) / half;
                let y = (c - row as f64 - dr) / half;
                sum += at(x, y);
            }
        }
        sum / (ss * ss) as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaintMode {
    #[default]
    Set,
    Add,
}

/// Ellipsoid in mm, relative to the volume center, rotated about z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    #[serde(default)]
    pub rotation_deg: f64,
    pub hu: f64,
    #[serde(default)]
    pub mode: PaintMode,
}

impl Ellipsoid {
    fn contains(&self, p: [f64; 3]) -> bool {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dz = p[2] - self.center[2];
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_axes[0]).powi(2)
            + (v / self.semi_axes[1]).powi(2)
            + (dz / self.semi_axes[2]).powi(2)
            <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoduleSpec {
    pub id: String,
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    pub hu: f64,
    /// Relative spike amplitude; 0 gives a smooth ellipsoid.
    #[serde(default)]
    pub spiculation: f64,
    #[serde(default = "default_lobes")]
    pub spikes: usize,
    /// Peak-to-peak internal heterogeneity in HU.
    #[serde(default)]
    pub texture_hu: f64,
    pub malignancy_score: f64,
}

fn default_lobes() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    #[serde(default = "default_background")]
    pub background_hu: f64,
    pub components: Vec<Ellipsoid>,
    #[serde(default)]
    pub nodules: Vec<NoduleSpec>,
}

fn default_background() -> f64 {
    -1000.0
}

struct Spiked {
    spec: NoduleSpec,
    directions: Vec<[f64; 3]>,
    amplitudes: Vec<f64>,
    texture_phase: [f64; 3],
}

impl Spiked {
    fn new(spec: &NoduleSpec, rng: &mut impl Rng) -> Self {
        let mut directions = Vec::with_capacity(spec.spikes);
        let mut amplitudes = Vec::with_capacity(spec.spikes);
        for _ in 0..spec.spikes {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            directions.push([r * phi.cos(), r * phi.sin(), z]);
            amplitudes.push(rng.random_range(0.5..1.0));
        }
        let texture_phase = [
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        ];
        Spiked {
            spec: spec.clone(),
            directions,
            amplitudes,
            texture_phase,
        }
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        let q = [
            (p[0] - self.spec.center[0]) / self.spec.semi_axes[0],
            (p[1] - self.spec.center[1]) / self.spec.semi_axes[1],
            (p[2] - self.spec.center[2]) / self.spec.semi_axes[2],
        ];
        let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if r <= 1.0 {
            return true;
        }
        if self.spec.spiculation <= 0.0 {
            return false;
        }
        let u = [q[0] / r, q[1] / r, q[2] / r];
        let mut reach = 1.0;
        for (d, a) in self.directions.iter().zip(&self.amplitudes) {
            let cos = u[0] * d[0] + u[1] * d[1] + u[2] * d[2];
            if cos > 0.0 {
                reach += self.spec.spiculation * a * cos.powi(24);
            }
        }
        r <= reach
    }

    fn value(&self, p: [f64; 3]) -> f64 {
        if self.spec.texture_hu == 0.0 {
            return self.spec.hu;
        }
        let f = 0.9;
        let t = (f * p[0] + self.texture_phase[0]).sin()
            * (f * p[1] + self.texture_phase[1]).sin()
            * (f * p[2] + self.texture_phase[2]).sin();
        self.spec.hu + 0.5 * self.spec.texture_hu * t
    }
}

/// Renders a phantom. Masks mark voxels whose centers fall inside each
/// nodule; overlapping nodules are rejected.
pub fn generate_phantom(spec: &PhantomSpec, seed: u64) -> Result<(CtVolume, Vec<NoduleMask>)> {
    if spec.components.is_empty() && spec.nodules.is_empty() {
        return Err(Error::Param("phantom spec has no components".into()));
    }
    let dims = Dims::new(spec.dims[0], spec.dims[1], spec.dims[2]);
    let centre = [
        (dims.nx as f64 - 1.0) / 2.0 * spec.spacing[0],
        (dims.ny as f64 - 1.0) / 2.0 * spec.spacing[1],
        (dims.nz as f64 - 1.0) / 2.0 * spec.spacing[2],
    ];
    let origin = [-centre[0], -centre[1], -centre[2]];
    let geometry = Geometry::new(dims, spec.spacing, origin)?;
    for n in &spec.nodules {
        if n.semi_axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Param(format!("nodule {} has non-positive axes", n.id)));
        }
    }

    let root = RngStream::new(seed);
    let nodules: Vec<Spiked> = spec
        .nodules
        .iter()
        .enumerate()
        .map(|(i, n)| Spiked::new(n, &mut root.substream("nodule", i as u64).rng()))
        .collect();

    let mut values = vec![spec.background_hu as f32; dims.len()];
    let mut owner: Vec<u16> = vec![0; dims.len()];
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let p = [
                    origin[0] + x as f64 * spec.spacing[0],
                    origin[1] + y as f64 * spec.spacing[1],
                    origin[2] + z as f64 * spec.spacing[2],
                ];
                let idx = dims.index(x, y, z);
                let mut v = spec.background_hu;
                for e in &spec.components {
                    if e.contains(p) {
                        match e.mode {
                            PaintMode::Set => v = e.hu,
                            PaintMode::Add => v += e.hu,
                        }
                    }
                }
                for (k, n) in nodules.iter().enumerate() {
                    if n.contains(p) {
                        if owner[idx] != 0 {
                            return Err(Error::Param(format!(
                                "nodules {} and {} overlap",
                                spec.nodules[owner[idx] as usize - 1].id,
                                n.spec.id
                            )));
                        }
                        owner[idx] = k as u16 + 1;
                        v = n.value(p);
                    }
                }
                values[idx] = v as f32;
            }
        }
    }

    let volume = CtVolume::new(geometry, values, IntensityUnit::Hu)?;
    let masks = nodules
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let m: Vec<u8> = owner.iter().map(|&o| (o as usize == k + 1) as u8).collect();
            NoduleMask::new(geometry, m, n.spec.id.clone(), n.spec.malignancy_score).map_err(|e| {
                Error::Param(format!("nodule {} has no voxel on the grid: {e}", n.spec.id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((volume, masks))
}

/// Parameters for a randomized multi-subject thorax dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub n_subjects: usize,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub nodules_per_subject: [usize; 2],
    pub malignant_fraction: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_subjects: 60,
            dims: [128, 128, 24],
            spacing: [1.0, 1.0, 2.0],
            nodules_per_subject: [1, 3],
            malignant_fraction: 0.3,
        }
    }
}

/// Thorax slab layout scaled to the in-plane field of view: soft-tissue body,
/// two lungs, spine, and a few vessels inside the lungs.
fn thorax_components(fov: f64, rng: &mut impl Rng) -> (Vec<Ellipsoid>, [Ellipsoid; 2]) {
    let s = fov / 128.0;
    let jitter = |rng: &mut dyn rand::RngCore, v: f64| v * (1.0 + 0.05 * (rng.random::<f64>() - 0.5));
    let body = Ellipsoid {
        center: [0.0, 0.0, 0.0],
        semi_axes: [jitter(rng, 58.0 * s), jitter(rng, 44.0 * s), 1e6],
        rotation_deg: 0.0,
        hu: 40.0,
        mode: PaintMode::Set,
    };
    let fat = Ellipsoid {
        center: [0.0, 0.0, 0.0],
        semi_axes: [body.semi_axes[0] - 4.0 * s, body.semi_axes[1] - 4.0 * s, 1e6],
        rotation_deg: 0.0,
        hu: -90.0,
        mode: PaintMode::Set,
    };
    let muscle = Ellipsoid {
        center: [0.0, 0.0, 0.0],
        semi_axes: [body.semi_axes[0] - 7.0 * s, body.semi_axes[1] - 7.0 * s, 1e6],
        rotation_deg: 0.0,
        hu: 50.0,
        mode: PaintMode::Set,
    };
    let lung = |side: f64, rng: &mut dyn rand::RngCore| Ellipsoid {
        center: [side * 24.0 * s, -2.0 * s, 0.0],
        semi_axes: [jitter(rng, 19.0 * s), jitter(rng, 30.0 * s), 1e6],
        rotation_deg: side * 8.0,
        hu: -850.0,
        mode: PaintMode::Set,
    };
    let lungs = [lung(-1.0, rng), lung(1.0, rng)];
    let spine = Ellipsoid {
        center: [0.0, 34.0 * s, 0.0],
        semi_axes: [7.0 * s, 7.0 * s, 1e6],
        rotation_deg: 0.0,
        hu: 500.0,
        mode: PaintMode::Set,
    };
    let mut comps = vec![body, fat, muscle, lungs[0].clone(), lungs[1].clone(), spine];
    for l in &lungs {
        for _ in 0..4 {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rr: f64 = rng.random_range(0.2..0.8);
            comps.push(Ellipsoid {
                center: [
                    l.center[0] + rr * l.semi_axes[0] * t.cos(),
                    l.center[1] + rr * l.semi_axes[1] * t.sin(),
                    0.0,
                ],
                semi_axes: [1.2 * s, 1.2 * s, 1e6],
                rotation_deg: 0.0,
                hu: 30.0,
                mode: PaintMode::Set,
            });
        }
    }
    (comps, lungs)
}

/// Per-subject phantom specs with class-separable nodules: non-malignant
/// nodules are small smooth ellipsoids, malignant ones larger, denser and
/// spiculated.
pub fn random_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<(String, PhantomSpec)>> {
    if spec.n_subjects == 0 {
        return Err(Error::Param("dataset needs at least one subject".into()));
    }
    if spec.nodules_per_subject[0] == 0 || spec.nodules_per_subject[0] > spec.nodules_per_subject[1] {
        return Err(Error::Param("invalid nodules_per_subject range".into()));
    }
    let root = RngStream::new(seed);
    let width = format!("{}", spec.n_subjects).len().max(3);
    let fov = spec.dims[0] as f64 * spec.spacing[0];
    let z_half = (spec.dims[2] as f64 - 1.0) / 2.0 * spec.spacing[2];
    let mut out = Vec::with_capacity(spec.n_subjects);
    for s in 0..spec.n_subjects {
        let subject = format!("sub{:0width$}", s, width = width);
        let mut rng = root.substream(&subject, 0).rng();
        let (components, lungs) = thorax_components(fov, &mut rng);
        let n_nod = rng.random_range(spec.nodules_per_subject[0]..=spec.nodules_per_subject[1]);
        let mut nodules: Vec<NoduleSpec> = Vec::new();
        let mut attempts = 0;
        while nodules.len() < n_nod && attempts < 200 {
            attempts += 1;
            let malignant = rng.random::<f64>() < spec.malignant_fraction;
            let radius: f64 = if malignant {
                rng.random_range(5.0..8.0)
            } else {
                rng.random_range(3.0..5.5)
            };
            let lung = &lungs[rng.random_range(0..2)];
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let room = [
                (lung.semi_axes[0] - radius * 1.6 - 1.0).max(0.0),
                (lung.semi_axes[1] - radius * 1.6 - 1.0).max(0.0),
            ];
            let rr: f64 = rng.random_range(0.0..0.9);
            let center = [
                lung.center[0] + rr * room[0] * t.cos(),
                lung.center[1] + rr * room[1] * t.sin(),
                rng.random_range(-(z_half - radius * 1.8).max(0.0)..=(z_half - radius * 1.8).max(0.0)),
            ];
            let clash = nodules.iter().any(|n| {
                let d = ((n.center[0] - center[0]).powi(2)
                    + (n.center[1] - center[1]).powi(2)
                    + (n.center[2] - center[2]).powi(2))
                .sqrt();
                d < 1.8 * (n.semi_axes[0] + radius) + 2.0
            });
            if clash {
                continue;
            }
            let elong: f64 = rng.random_range(0.85..1.15);
            let id = format!("{subject}_n{}", nodules.len());
            let node = if malignant {
                NoduleSpec {
                    id,
                    center,
                    semi_axes: [radius * elong, radius / elong, radius],
                    hu: rng.random_range(10.0..60.0),
                    spiculation: rng.random_range(0.5..0.8),
                    spikes: rng.random_range(8..14),
                    texture_hu: rng.random_range(60.0..120.0),
                    malignancy_score: rng.random_range(4.25..5.0),
                }
            } else {
                NoduleSpec {
                    id,
                    center,
                    semi_axes: [radius * elong, radius / elong, radius],
                    hu: rng.random_range(-250.0..-100.0),
                    spiculation: 0.0,
                    spikes: 0,
                    texture_hu: 0.0,
                    malignancy_score: rng.random_range(1.0..3.5),
                }
            };
            nodules.push(node);
        }
        if nodules.is_empty() {
            return Err(Error::Param(format!("could not place a nodule for {subject}")));
        }
        out.push((
            subject,
            PhantomSpec {
                dims: spec.dims,
                spacing: spec.spacing,
                background_hu: -1000.0,
                components,
                nodules,
            },
        ));
    }
    Ok(out)
}
