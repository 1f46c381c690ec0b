//! Paired image-quality metrics: MAE, SSIM and MS-SSIM.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image2;

/// Standard five-scale MS-SSIM exponents.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn same_shape(a: &Image2, b: &Image2) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "images differ in shape: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn mae(a: &Image2, b: &Image2) -> Result<f64> {
    same_shape(a, b)?;
    let n = a.data().len();
    if n == 0 {
        return Err(Error::Shape("empty images".into()));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

impl SsimParams {
    fn c1(&self) -> f64 {
        (self.k1 * self.data_range).powi(2)
    }
    fn c2(&self) -> f64 {
        (self.k2 * self.data_range).powi(2)
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Separable "valid" filtering (no padding).
fn filter_valid(img: &Image2, w: &[f64]) -> Image2 {
    let k = w.len();
    let (rows, cols) = img.shape();
    let oc = cols + 1 - k;
    let or = rows + 1 - k;
    let horiz = Image2::from_fn(rows, oc, |r, c| {
        w.iter().enumerate().map(|(i, wi)| wi * img.get(r, c + i)).sum()
    });
    Image2::from_fn(or, oc, |r, c| {
        w.iter().enumerate().map(|(i, wi)| wi * horiz.get(r + i, c)).sum()
    })
}

/// Local SSIM statistics: mean of the full SSIM map and of its
/// contrast-structure factor.
fn ssim_components(a: &Image2, b: &Image2, p: &SsimParams) -> Result<(f64, f64)> {
    same_shape(a, b)?;
    if a.rows() < p.window || a.cols() < p.window {
        return Err(Error::Shape(format!(
            "image {:?} smaller than SSIM window {}",
            a.shape(),
            p.window
        )));
    }
    let w = gaussian_window(p.window, p.sigma);
    let mu_a = filter_valid(a, &w);
    let mu_b = filter_valid(b, &w);
    let aa = filter_valid(&Image2::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c).powi(2)), &w);
    let bb = filter_valid(&Image2::from_fn(a.rows(), a.cols(), |r, c| b.get(r, c).powi(2)), &w);
    let ab = filter_valid(&Image2::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c) * b.get(r, c)), &w);
    let (c1, c2) = (p.c1(), p.c2());
    let n = mu_a.data().len() as f64;
    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    for i in 0..mu_a.data().len() {
        let ma = mu_a.data()[i];
        let mb = mu_b.data()[i];
        let va = aa.data()[i] - ma * ma;
        let vb = bb.data()[i] - mb * mb;
        let cov = ab.data()[i] - ma * mb;
        let lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        let cs = (2.0 * cov + c2) / (va + vb + c2);
        ssim_sum += lum * cs;
        cs_sum += cs;
    }
    Ok((ssim_sum / n, cs_sum / n))
}

/// Mean SSIM with a Gaussian window over the valid region.
pub fn ssim(a: &Image2, b: &Image2, p: &SsimParams) -> Result<f64> {
    Ok(ssim_components(a, b, p)?.0)
}

/// Multi-scale SSIM with 2×2 mean downsampling between scales. When the
/// image is too small for `scales`, the count is reduced (with a warning)
/// and the remaining weights renormalized.
pub fn ms_ssim(a: &Image2, b: &Image2, scales: usize, weights: &[f64], p: &SsimParams) -> Result<f64> {
    same_shape(a, b)?;
    if scales == 0 || weights.len() < scales {
        return Err(Error::Param("need one weight per scale".into()));
    }
    let min_dim = a.rows().min(a.cols());
    let mut usable = scales;
    while usable > 1 && min_dim < p.window << (usable - 1) {
        usable -= 1;
    }
    if usable < scales {
        warn!("MS-SSIM: image {:?} supports {usable} of {scales} scales", a.shape());
    }
    let total: f64 = weights[..usable].iter().sum();
    let w: Vec<f64> = weights[..usable].iter().map(|x| x / total).collect();

    let mut x = a.clone();
    let mut y = b.clone();
    let mut result = 1.0;
    for (j, wj) in w.iter().enumerate() {
        let (s, cs) = ssim_components(&x, &y, p)?;
        if j + 1 == usable {
            result *= s.max(0.0).powf(*wj);
        } else {
            result *= cs.max(0.0).powf(*wj);
            x = x.downsample2();
            y = y.downsample2();
        }
    }
    Ok(result)
}
