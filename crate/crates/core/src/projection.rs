//! Parallel-beam Radon transform and filtered back-projection.
//!
//! Image coordinates are centered: `x = col - c`, `y = c - row` with
//! `c = (n - 1) / 2`. A ray at angle `θ` and offset `s` is the line
//! `x·cosθ + y·sinθ = s`. Detector `j` sits at `s = (j - (n_det - 1)/2)·spacing`,
//! with offsets measured in image pixels.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampWindow {
    /// Unapodized Ram-Lak.
    #[default]
    None,
    /// Ram-Lak multiplied by `cos(π f)`; lower noise, lower resolution.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionGeometry {
    pub angles: Vec<f64>,
    pub n_detectors: usize,
    pub detector_spacing: f64,
    pub assume_in_circle: bool,
    #[serde(default)]
    pub window: RampWindow,
}

impl ProjectionGeometry {
    /// `n_angles` evenly spaced over [0, π).
    pub fn parallel(
        n_angles: usize,
        n_detectors: usize,
        detector_spacing: f64,
        assume_in_circle: bool,
    ) -> Result<Self> {
        let angles = (0..n_angles)
            .map(|i| PI * i as f64 / n_angles as f64)
            .collect();
        Self::from_angles(angles, n_detectors, detector_spacing, assume_in_circle)
    }

    pub fn from_angles(
        angles: Vec<f64>,
        n_detectors: usize,
        detector_spacing: f64,
        assume_in_circle: bool,
    ) -> Result<Self> {
        let g = ProjectionGeometry {
            angles,
            n_detectors,
            detector_spacing,
            assume_in_circle,
            window: RampWindow::None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Default acquisition for a square image of side `side`: angle count
    /// `ceil(π/2 · side)` rounded up to a multiple of 4, detector count the
    /// image diagonal rounded up to odd.
    pub fn default_for(side: usize) -> Self {
        let n_angles = default_n_angles(side);
        let n_detectors = default_n_detectors(side);
        Self::parallel(n_angles, n_detectors, 1.0, false).expect("default geometry is valid")
    }

    pub fn with_window(mut self, window: RampWindow) -> Self {
        self.window = window;
        self
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() {
            return Err(Error::Geometry("at least one projection angle required".into()));
        }
        if self.angles.iter().any(|a| !a.is_finite())
            || self.angles.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Geometry("angles must be finite and strictly increasing".into()));
        }
        if self.n_detectors == 0 {
            return Err(Error::Geometry("at least one detector required".into()));
        }
        if !(self.detector_spacing > 0.0 && self.detector_spacing.is_finite()) {
            return Err(Error::Geometry("detector spacing must be > 0".into()));
        }
        Ok(())
    }

    /// Offset of detector `j` (pixel units).
    #[inline]
    pub fn detector_offset(&self, j: usize) -> f64 {
        (j as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    fn half_span(&self) -> f64 {
        (self.n_detectors as f64 - 1.0) / 2.0 * self.detector_spacing
    }

    /// Checks that the detector row covers the support of a `side`² image.
    pub fn check_coverage(&self, side: usize) -> Result<()> {
        let c = (side as f64 - 1.0) / 2.0;
        let needed = if self.assume_in_circle {
            c
        } else {
            c * std::f64::consts::SQRT_2
        };
        if self.half_span() + 1e-9 < needed {
            return Err(Error::Geometry(format!(
                "{} detectors at spacing {} cover ±{:.2} px, image of side {side} needs ±{:.2}",
                self.n_detectors,
                self.detector_spacing,
                self.half_span(),
                needed
            )));
        }
        Ok(())
    }
}

pub fn default_n_angles(side: usize) -> usize {
    let n = (PI / 2.0 * side as f64).ceil() as usize;
    n.div_ceil(4).max(1) * 4
}

pub fn default_n_detectors(side: usize) -> usize {
    let n = (side as f64 * std::f64::consts::SQRT_2).ceil() as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Angle × detector grid of line integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geometry: ProjectionGeometry,
    values: Vec<f64>,
    pixel_size: f64,
}

impl Sinogram {
    pub fn new(geometry: ProjectionGeometry, values: Vec<f64>, pixel_size: f64) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.n_angles() * geometry.n_detectors {
            return Err(Error::Shape(format!(
                "{} values for {}x{} sinogram",
                values.len(),
                geometry.n_angles(),
                geometry.n_detectors
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sinogram holds non-finite values".into()));
        }
        if !(pixel_size > 0.0) {
            return Err(Error::Param("pixel size must be > 0".into()));
        }
        Ok(Sinogram {
            geometry,
            values,
            pixel_size,
        })
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Sinogram {
        debug_assert_eq!(values.len(), self.values.len());
        Sinogram {
            geometry: self.geometry.clone(),
            values,
            pixel_size: self.pixel_size,
        }
    }

    pub fn geometry(&self) -> &ProjectionGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Physical size (mm) of one image pixel; line integrals are in units of
    /// attenuation × mm.
    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn row(&self, angle: usize) -> &[f64] {
        let n = self.geometry.n_detectors;
        &self.values[angle * n..(angle + 1) * n]
    }

    pub fn scale(&self, a: f64) -> Sinogram {
        self.with_values(self.values.iter().map(|v| a * v).collect())
    }
}

/// Pads a rectangular image with zeros to a centered square.
pub fn pad_to_square(img: &Image2) -> Image2 {
    let (r, c) = img.shape();
    if r == c {
        return img.clone();
    }
    let n = r.max(c);
    let r0 = (n - r) / 2;
    let c0 = (n - c) / 2;
    let mut out = Image2::zeros(n, n);
    for i in 0..r {
        for j in 0..c {
            out.set(r0 + i, c0 + j, img.get(i, j));
        }
    }
    out
}

/// Sampling step along each ray, in pixels.
const RAY_STEP: f64 = 1.0;

/// Line integrals of `image` (pixel size `pixel_size` mm) along parallel rays.
/// Each ray is sampled bilinearly at unit-pixel steps.
pub fn radon(image: &Image2, geom: &ProjectionGeometry, pixel_size: f64) -> Result<Sinogram> {
    geom.validate()?;
    let (rows, cols) = image.shape();
    if rows != cols {
        return Err(Error::Shape(format!(
            "radon needs a square image, got {rows}x{cols}; pad first"
        )));
    }
    if !image.is_finite() {
        return Err(Error::Numerical("image holds non-finite values".into()));
    }
    geom.check_coverage(rows)?;
    let n = rows;
    let c = (n as f64 - 1.0) / 2.0;
    let half_t = ((c * std::f64::consts::SQRT_2 + 1.0) / RAY_STEP).ceil() as isize;
    let nd = geom.n_detectors;

    let values: Vec<f64> = geom
        .angles
        .par_iter()
        .flat_map_iter(|&theta| {
            let (sin, cos) = theta.sin_cos();
            (0..nd).map(move |j| {
                let s = geom.detector_offset(j);
                let mut acc = 0.0;
                for t in -half_t..=half_t {
                    let t = t as f64 * RAY_STEP;
                    let x = s * cos - t * sin;
                    let y = s * sin + t * cos;
                    acc += image.sample_bilinear(c - y, x + c);
                }
                acc * RAY_STEP * pixel_size
            })
        })
        .collect();
    Sinogram::new(geom.clone(), values, pixel_size)
}

/// Discrete Ram-Lak taps for integer offsets: 1/4 at 0, 0 at even offsets,
/// `-1/(π k)²` at odd offsets.
pub fn ramlak_tap(k: isize) -> f64 {
    if k == 0 {
        0.25
    } else if k % 2 == 0 {
        0.0
    } else {
        let kf = k as f64;
        -1.0 / (PI * PI * kf * kf)
    }
}

/// Real frequency response of the padded Ram-Lak filter for `n_detectors`
/// bins, in FFT order. Built from the spatial taps so the impulse response
/// reproduces them. The tap at offset `padded / 2` is never reached by a
/// linear convolution of `n_detectors` samples, so it carries minus the sum
/// of the others, which makes the DC gain exactly zero.
pub fn ramp_frequency_response(n_detectors: usize, window: RampWindow) -> Vec<f64> {
    let padded = (2 * n_detectors).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(padded);
    let mut kernel: Vec<Complex<f64>> = (0..padded)
        .map(|i| {
            let k = if i <= padded / 2 {
                i as isize
            } else {
                i as isize - padded as isize
            };
            Complex::new(ramlak_tap(k), 0.0)
        })
        .collect();
    let half = padded / 2;
    kernel[half] = Complex::new(0.0, 0.0);
    let total: f64 = kernel.iter().map(|c| c.re).sum();
    kernel[half] = Complex::new(-total, 0.0);
    fwd.process(&mut kernel);
    let mut response: Vec<f64> = kernel
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let w = match window {
                RampWindow::None => 1.0,
                RampWindow::Cosine => {
                    let f = if i <= padded / 2 { i } else { padded - i } as f64 / padded as f64;
                    (PI * f).cos()
                }
            };
            h.re * w
        })
        .collect();
    response[0] = 0.0;
    response
}

/// Bins per detector at which `fbp` evaluates the filtered projections
/// (spectral interpolation) before linear back-projection.
pub const FBP_UPSAMPLE: usize = 2;

/// Ramp-filters every row and evaluates the result on a grid `upsample`
/// times finer than the detector spacing by zero-extending the spectrum.
/// Returns `upsample·(n_detectors - 1) + 1` samples per row.
fn filter_rows(sino: &Sinogram, upsample: usize) -> Result<Vec<f64>> {
    let geom = sino.geometry();
    let nd = geom.n_detectors;
    if nd < 2 {
        return Err(Error::Geometry("ramp filter needs at least 2 detectors".into()));
    }
    let response = ramp_frequency_response(nd, geom.window);
    let padded = response.len();
    let fine = padded * upsample;
    let keep = upsample * (nd - 1) + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(padded);
    let inv = planner.plan_fft_inverse(fine);

    let scale = 1.0 / (geom.detector_spacing * padded as f64);
    let half = padded / 2;
    let values: Vec<f64> = sino
        .values()
        .par_chunks(nd)
        .flat_map_iter(|row| {
            let mut buf: Vec<Complex<f64>> = row
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(padded)
                .collect();
            fwd.process(&mut buf);
            for (b, r) in buf.iter_mut().zip(&response) {
                *b *= *r;
            }
            let spectrum = if upsample == 1 {
                buf
            } else {
                let mut ext = vec![Complex::new(0.0, 0.0); fine];
                ext[..half].copy_from_slice(&buf[..half]);
                ext[fine - half + 1..].copy_from_slice(&buf[half + 1..]);
                ext[half] = buf[half] * 0.5;
                ext[fine - half] = buf[half] * 0.5;
                ext
            };
            let mut out = spectrum;
            inv.process(&mut out);
            out.into_iter().take(keep).map(move |c| c.re * scale)
        })
        .collect();
    Ok(values)
}

/// Ram-Lak filtering of every detector row via FFT multiplication after
/// zero-padding to the next power of two >= 2·n_detectors.
pub fn ramp_filter(sino: &Sinogram) -> Result<Sinogram> {
    Ok(sino.with_values(filter_rows(sino, 1)?))
}

/// Linear back-projection of rows holding `upsample` bins per detector.
fn backproject_rows(
    rows: &[f64],
    upsample: usize,
    geom: &ProjectionGeometry,
    pixel_size: f64,
    out_size: usize,
) -> Result<Image2> {
    geom.check_coverage(out_size)?;
    let nb = upsample * (geom.n_detectors - 1) + 1;
    let trig: Vec<(f64, f64)> = geom.angles.iter().map(|a| a.sin_cos()).collect();
    let c = (out_size as f64 - 1.0) / 2.0;
    let radius2 = (out_size as f64 / 2.0).powi(2);
    let centre = (nb as f64 - 1.0) / 2.0;
    let inv_ds = upsample as f64 / geom.detector_spacing;
    let scale = PI / geom.n_angles() as f64 / pixel_size;

    let mut data = vec![0.0; out_size * out_size];
    data.par_chunks_mut(out_size)
        .enumerate()
        .for_each(|(row, out_row)| {
            let y = c - row as f64;
            for (col, px) in out_row.iter_mut().enumerate() {
                let x = col as f64 - c;
                if geom.assume_in_circle && x * x + y * y > radius2 {
                    continue;
                }
                let mut acc = 0.0;
                for (a, &(sin, cos)) in trig.iter().enumerate() {
                    let t = (x * cos + y * sin) * inv_ds + centre;
                    let t0 = t.floor();
                    let i0 = t0 as isize;
                    if i0 < -1 || i0 >= nb as isize {
                        continue;
                    }
                    let f = t - t0;
                    let r = &rows[a * nb..(a + 1) * nb];
                    let lo = if i0 >= 0 { r[i0 as usize] } else { 0.0 };
                    let hi = if i0 + 1 < nb as isize { r[(i0 + 1) as usize] } else { 0.0 };
                    acc += lo * (1.0 - f) + hi * f;
                }
                *px = acc * scale;
            }
        });
    Image2::from_vec(out_size, out_size, data)
}

/// Back-projection of an already filtered sinogram onto `out_size`² pixels.
pub fn backproject(filtered: &Sinogram, out_size: usize) -> Result<Image2> {
    backproject_rows(filtered.values(), 1, filtered.geometry(), filtered.pixel_size(), out_size)
}

/// Filtered back-projection: Ram-Lak filtering evaluated at
/// `FBP_UPSAMPLE` bins per detector, linear back-projection, `π / n_angles`
/// angular weight, conversion back to per-mm attenuation.
pub fn fbp(sino: &Sinogram, out_size: usize) -> Result<Image2> {
    if sino.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("sinogram holds non-finite values".into()));
    }
    let rows = filter_rows(sino, FBP_UPSAMPLE)?;
    backproject_rows(&rows, FBP_UPSAMPLE, sino.geometry(), sino.pixel_size(), out_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize, r: f64, value: f64) -> Image2 {
        let c = (n as f64 - 1.0) / 2.0;
        Image2::from_fn(n, n, |i, j| {
            let (y, x) = (i as f64 - c, j as f64 - c);
            if x * x + y * y <= r * r {
                value
            } else {
                0.0
            }
        })
    }

    #[test]
    fn default_geometry_counts() {
        let g = ProjectionGeometry::default_for(256);
        assert_eq!(g.n_angles() % 4, 0);
        assert!(g.n_angles() as f64 >= PI / 2.0 * 256.0);
        assert_eq!(g.n_detectors % 2, 1);
        assert_eq!(g.n_detectors, 363);
        assert!(g.check_coverage(256).is_ok());
    }

    #[test]
    fn geometry_guards() {
        assert!(ProjectionGeometry::from_angles(vec![0.0, 0.0], 5, 1.0, false).is_err());
        assert!(ProjectionGeometry::parallel(0, 5, 1.0, false).is_err());
        let g = ProjectionGeometry::parallel(4, 11, 1.0, false).unwrap();
        assert!(radon(&Image2::zeros(32, 32), &g, 1.0).is_err());
    }

    #[test]
    fn zero_image_zero_sinogram() {
        let g = ProjectionGeometry::default_for(32);
        let s = radon(&Image2::zeros(32, 32), &g, 1.0).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_projection_matches_chord() {
        let n = 128;
        let r = 40.0;
        let img = disk(n, r, 1.0);
        let g = ProjectionGeometry::parallel(16, default_n_detectors(n), 1.0, false).unwrap();
        let s = radon(&img, &g, 1.0).unwrap();
        let mut max_err: f64 = 0.0;
        for a in 0..g.n_angles() {
            for j in 0..g.n_detectors {
                let off = g.detector_offset(j);
                // The chord is infinitely steep at the rim; compare away from it.
                if (off.abs() - r).abs() < 4.0 {
                    continue;
                }
                let chord = if off.abs() < r { 2.0 * (r * r - off * off).sqrt() } else { 0.0 };
                max_err = max_err.max((s.row(a)[j] - chord).abs());
            }
        }
        assert!(max_err < 2.0, "max chord error {max_err}");
    }

    #[test]
    fn ramp_impulse_response_is_ramlak() {
        let nd = 33;
        let g = ProjectionGeometry::parallel(1, nd, 1.0, false).unwrap();
        let mut vals = vec![0.0; nd];
        vals[16] = 1.0;
        let f = ramp_filter(&Sinogram::new(g, vals, 1.0).unwrap()).unwrap();
        for j in 0..nd {
            let k = j as isize - 16;
            assert!((f.values()[j] - ramlak_tap(k)).abs() < 1e-6, "offset {k}");
        }
    }

    #[test]
    fn ramp_kills_dc() {
        let h = ramp_frequency_response(257, RampWindow::None);
        let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(h[0].abs() < 1e-6 * peak);
        // Away from its truncated ends a constant row is (nearly) pure DC.
        let nd = 257;
        let g = ProjectionGeometry::parallel(1, nd, 1.0, false).unwrap();
        let f = ramp_filter(&Sinogram::new(g, vec![1.0; nd], 1.0).unwrap()).unwrap();
        assert!(f.values()[nd / 2].abs() < 2e-3);
    }

    #[test]
    fn ramp_is_linear() {
        let nd = 40;
        let g = ProjectionGeometry::parallel(2, nd, 1.0, false).unwrap();
        let x: Vec<f64> = (0..2 * nd).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let y: Vec<f64> = (0..2 * nd).map(|i| ((i * 13) % 7) as f64 * 0.3).collect();
        let (a, b) = (2.5, -0.75);
        let sx = ramp_filter(&Sinogram::new(g.clone(), x.clone(), 1.0).unwrap()).unwrap();
        let sy = ramp_filter(&Sinogram::new(g.clone(), y.clone(), 1.0).unwrap()).unwrap();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let sc = ramp_filter(&Sinogram::new(g, comb, 1.0).unwrap()).unwrap();
        for i in 0..2 * nd {
            let want = a * sx.values()[i] + b * sy.values()[i];
            assert!((sc.values()[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_disk_mean_recovered() {
        let n = 128;
        let img = disk(n, 40.0, 0.02);
        let g = ProjectionGeometry::default_for(n);
        let rec = fbp(&radon(&img, &g, 1.0).unwrap(), n).unwrap();
        let c = (n as f64 - 1.0) / 2.0;
        let (mut sum, mut cnt) = (0.0, 0);
        for i in 0..n {
            for j in 0..n {
                let (y, x) = (i as f64 - c, j as f64 - c);
                if x * x + y * y <= 35.0 * 35.0 {
                    sum += rec.get(i, j);
                    cnt += 1;
                }
            }
        }
        let mean = sum / cnt as f64;
        assert!((mean - 0.02).abs() / 0.02 < 0.03, "mean {mean}");
    }

    #[test]
    fn pixel_size_round_trips() {
        let n = 64;
        let img = disk(n, 20.0, 0.02);
        let g = ProjectionGeometry::default_for(n);
        let s1 = radon(&img, &g, 1.0).unwrap();
        let s2 = radon(&img, &g, 0.5).unwrap();
        for (a, b) in s1.values().iter().zip(s2.values()) {
            assert!((0.5 * a - b).abs() < 1e-12);
        }
        let r1 = fbp(&s1, n).unwrap();
        let r2 = fbp(&s2, n).unwrap();
        for (a, b) in r1.data().iter().zip(r2.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_window_smooths() {
        let n = 64;
        let img = disk(n, 20.0, 1.0);
        let g = ProjectionGeometry::default_for(n);
        let plain = ramp_filter(&radon(&img, &g, 1.0).unwrap()).unwrap();
        let gw = g.clone().with_window(RampWindow::Cosine);
        let cos = ramp_filter(&radon(&img, &gw, 1.0).unwrap()).unwrap();
        let peak = |s: &Sinogram| s.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak(&cos) < peak(&plain));
    }
}
