//! Patch extraction and pluggable patch embeddings.

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image2;
use crate::volume::{CtVolume, IntensityUnit};

/// Equal-size 2-D patches with their (subject, slice) provenance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchSet {
    pub size: usize,
    pub patches: Vec<Image2>,
    pub tags: Vec<(String, usize)>,
}

impl PatchSet {
    pub fn new(size: usize) -> Self {
        PatchSet {
            size,
            patches: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn push(&mut self, patch: Image2, subject: &str, slice: usize) -> Result<()> {
        if patch.shape() != (self.size, self.size) {
            return Err(Error::Shape(format!(
                "patch {:?} in a set of {}x{} patches",
                patch.shape(),
                self.size,
                self.size
            )));
        }
        self.patches.push(patch);
        self.tags.push((subject.to_string(), slice));
        Ok(())
    }

    pub fn extend(&mut self, other: PatchSet) -> Result<()> {
        for (p, (s, z)) in other.patches.into_iter().zip(other.tags) {
            self.push(p, &s, z)?;
        }
        Ok(())
    }
}

/// One centered `size`×`size` patch per axial slice. HU volumes are mapped
/// onto [0, 1] with `window`; an odd surplus puts the extra pixel after the
/// patch (offset `floor((n - size) / 2)`).
pub fn center_crop_patches(
    volume: &CtVolume,
    size: usize,
    window: (f64, f64),
    subject: &str,
) -> Result<PatchSet> {
    let d = volume.dims();
    if d.nx < size || d.ny < size {
        return Err(Error::Shape(format!(
            "slice {}x{} smaller than patch size {size}",
            d.nx, d.ny
        )));
    }
    let map: Box<dyn Fn(f64) -> f64> = match volume.unit() {
        IntensityUnit::Normalized => Box::new(|v| v),
        IntensityUnit::Hu => {
            let (lo, hi) = window;
            if !(lo < hi) {
                return Err(Error::Param("empty normalization window".into()));
            }
            Box::new(move |v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
        }
        IntensityUnit::RawDicom => {
            return Err(Error::Unit {
                expected: IntensityUnit::Hu,
                found: IntensityUnit::RawDicom,
            })
        }
    };
    let r0 = (d.ny - size) / 2;
    let c0 = (d.nx - size) / 2;
    let mut set = PatchSet::new(size);
    for z in 0..d.nz {
        let patch = volume.slice(z).crop(r0, c0, size, size)?.map(&map);
        set.push(patch, subject, z)?;
    }
    Ok(set)
}

/// Maps a patch to a fixed-length feature vector.
pub trait Embedder: Send + Sync {
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, patch: &Image2) -> Vec<f64>;
}

/// Handcrafted 128-dimensional embedding: 8×8 mean-pooled intensities,
/// a 32-bin intensity histogram over [0, 1], and a 32-bin radially averaged
/// power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HandcraftedEmbedder {
    pub pool: usize,
    pub hist_bins: usize,
    pub spectrum_bins: usize,
}

impl Default for HandcraftedEmbedder {
    fn default() -> Self {
        HandcraftedEmbedder {
            pool: 8,
            hist_bins: 32,
            spectrum_bins: 32,
        }
    }
}

impl HandcraftedEmbedder {
    fn pooled(&self, p: &Image2) -> Vec<f64> {
        let (rows, cols) = p.shape();
        let mut out = Vec::with_capacity(self.pool * self.pool);
        for bi in 0..self.pool {
            let (r0, r1) = (bi * rows / self.pool, ((bi + 1) * rows / self.pool).max(bi * rows / self.pool + 1));
            for bj in 0..self.pool {
                let (c0, c1) = (bj * cols / self.pool, ((bj + 1) * cols / self.pool).max(bj * cols / self.pool + 1));
                let mut s = 0.0;
                let mut n = 0usize;
                for r in r0..r1.min(rows) {
                    for c in c0..c1.min(cols) {
                        s += p.get(r, c);
                        n += 1;
                    }
                }
                out.push(if n > 0 { s / n as f64 } else { 0.0 });
            }
        }
        out
    }

    fn histogram(&self, p: &Image2) -> Vec<f64> {
        let mut h = vec![0.0; self.hist_bins];
        for &v in p.data() {
            let b = ((v.clamp(0.0, 1.0) * self.hist_bins as f64).floor() as usize).min(self.hist_bins - 1);
            h[b] += 1.0;
        }
        let n = p.data().len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    fn spectrum(&self, p: &Image2) -> Vec<f64> {
        let (rows, cols) = p.shape();
        let mut planner = FftPlanner::<f64>::new();
        let fr = planner.plan_fft_forward(cols);
        let fc = planner.plan_fft_forward(rows);
        let mut buf: Vec<Complex<f64>> = p.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        for row in buf.chunks_mut(cols) {
            fr.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); rows];
        for c in 0..cols {
            for r in 0..rows {
                col[r] = buf[r * cols + c];
            }
            fc.process(&mut col);
            for r in 0..rows {
                buf[r * cols + c] = col[r];
            }
        }
        let norm = ((rows * cols) as f64).powi(2);
        let r_max = std::f64::consts::SQRT_2 * 0.5;
        let mut sums = vec![0.0; self.spectrum_bins];
        let mut counts = vec![0usize; self.spectrum_bins];
        let wrap = |k: usize, n: usize| -> f64 {
            if k <= n / 2 {
                k as f64 / n as f64
            } else {
                (k as f64 - n as f64) / n as f64
            }
        };
        for r in 0..rows {
            let fy = wrap(r, rows);
            for c in 0..cols {
                let fx = wrap(c, cols);
                let rad = (fx * fx + fy * fy).sqrt() / r_max;
                let b = ((rad * self.spectrum_bins as f64).floor() as usize).min(self.spectrum_bins - 1);
                sums[b] += buf[r * cols + c].norm_sqr() / norm;
                counts[b] += 1;
            }
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect()
    }
}

impl Embedder for HandcraftedEmbedder {
    fn id(&self) -> String {
        format!(
            "handcrafted-pool{}-hist{}-psd{}",
            self.pool, self.hist_bins, self.spectrum_bins
        )
    }

    fn dim(&self) -> usize {
        self.pool * self.pool + self.hist_bins + self.spectrum_bins
    }

    fn embed(&self, patch: &Image2) -> Vec<f64> {
        let mut v = self.pooled(patch);
        v.extend(self.histogram(patch));
        v.extend(self.spectrum(patch));
        v
    }
}

/// Embeds every patch; row `i` belongs to patch `i`.
pub fn embed_patches(set: &PatchSet, embedder: &dyn Embedder) -> Result<DMatrix<f64>> {
    if set.is_empty() {
        return Err(Error::Param("cannot embed an empty patch set".into()));
    }
    let d = embedder.dim();
    let rows: Vec<Vec<f64>> = set.patches.par_iter().map(|p| embedder.embed(p)).collect();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("embedder returned a vector of the wrong length".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}
