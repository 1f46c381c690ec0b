//! Sinogram-domain dose degradation.
//!
//! Two noise models are provided:
//!
//! * [`degrade_sinogram_simple`]: re-draws the transmitted photon count as
//!   `Poisson(I0·exp(-p)) + Normal(m_e, σ_e²)` and takes `log(I0 / count)`.
//! * [`degrade_sinogram_physics`]: adds zero-mean Gaussian noise whose
//!   variance is `(1-a)/a · exp(p)/N0 · (1 + (1+a)/a · Ne·exp(p)/N0)`, the
//!   extra variance of a scan at dose fraction `a` relative to the input.
//!
//! [`degrade_volume`] applies either model slice by slice between a Radon
//! transform and filtered back-projection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::image::Image2;
use crate::projection::{fbp, radon, ProjectionGeometry, Sinogram};
use crate::rng::RngStream;
use crate::volume::{CtVolume, IntensityUnit};

/// Linear attenuation of water (1/mm) used to convert HU to attenuation.
pub const MU_WATER_PER_MM: f64 = 0.0192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimpleNoiseParams {
    #[serde(rename = "I0_ld")]
    pub i0_ld: f64,
    pub m_e: f64,
    pub sigma_e2: f64,
    pub epsilon_floor: f64,
}

impl Default for SimpleNoiseParams {
    fn default() -> Self {
        SimpleNoiseParams {
            i0_ld: 2.5e4,
            m_e: 0.0,
            sigma_e2: 10.0,
            epsilon_floor: 0.1,
        }
    }
}

impl SimpleNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.i0_ld > 0.0 && self.i0_ld.is_finite()) {
            return Err(Error::Param("I0_ld must be > 0".into()));
        }
        if !(self.sigma_e2 >= 0.0) || !self.m_e.is_finite() {
            return Err(Error::Param("electronic noise needs finite mean and variance >= 0".into()));
        }
        if !(self.epsilon_floor > 0.0) {
            return Err(Error::Param("epsilon_floor must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsNoiseParams {
    pub a: f64,
    #[serde(rename = "N0A")]
    pub n0a: f64,
    #[serde(rename = "Ne")]
    pub ne: f64,
}

impl Default for PhysicsNoiseParams {
    fn default() -> Self {
        PhysicsNoiseParams {
            a: 0.25,
            n0a: 1e5,
            ne: 10.0,
        }
    }
}

impl PhysicsNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::Param(format!("dose factor a = {} outside (0, 1]", self.a)));
        }
        if !(self.n0a > 0.0 && self.n0a.is_finite()) {
            return Err(Error::Param("N0A must be > 0".into()));
        }
        if !(self.ne >= 0.0 && self.ne.is_finite()) {
            return Err(Error::Param("Ne must be >= 0".into()));
        }
        Ok(())
    }

    /// Standard deviation of the noise added to a line integral `p`.
    pub fn noise_std(&self, p: f64) -> f64 {
        let a = self.a;
        let e = p.exp() / self.n0a;
        ((1.0 - a) / a * e * (1.0 + (1.0 + a) / a * self.ne * e)).max(0.0).sqrt()
    }
}

/// Poisson draw: sequential inversion below λ = 30, Hörmann's PTRS
/// transformed rejection above.
pub fn sample_poisson(lambda: f64, rng: &mut impl Rng) -> f64 {
    if !(lambda > 0.0) {
        return 0.0;
    }
    if lambda < 30.0 {
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let u: f64 = rng.random();
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                break;
            }
        }
        return k as f64;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -lambda + k * loglam - ln_gamma(k + 1.0)
        {
            return k;
        }
    }
}

/// Low-dose sinogram from photon-count resampling plus electronic noise.
pub fn degrade_sinogram_simple(
    p_sd: &Sinogram,
    params: &SimpleNoiseParams,
    rng: &mut impl Rng,
) -> Result<Sinogram> {
    params.validate()?;
    let sigma_e = params.sigma_e2.sqrt();
    let values = p_sd
        .values()
        .iter()
        .map(|&p| {
            let counts = sample_poisson(params.i0_ld * (-p).exp(), rng);
            let z: f64 = StandardNormal.sample(rng);
            let d = counts + params.m_e + sigma_e * z;
            (params.i0_ld / d.max(params.epsilon_floor)).ln()
        })
        .collect();
    Ok(p_sd.with_values(values))
}

/// Reduced-dose sinogram by additive Gaussian noise with the dose-scaling
/// variance. `a = 1` returns the input unchanged.
pub fn degrade_sinogram_physics(
    p_a: &Sinogram,
    params: &PhysicsNoiseParams,
    rng: &mut impl Rng,
) -> Result<Sinogram> {
    params.validate()?;
    if params.a == 1.0 {
        return Ok(p_a.clone());
    }
    let values = p_a
        .values()
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            p + params.noise_std(p) * z
        })
        .collect();
    Ok(p_a.with_values(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegradeMethod {
    SimpleSinogram,
    PhysicsSinogram,
}

impl DegradeMethod {
    pub fn slug(self) -> &'static str {
        match self {
            DegradeMethod::SimpleSinogram => "simple",
            DegradeMethod::PhysicsSinogram => "physics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Defaults to the image-size rule when absent.
    pub n_angles: Option<usize>,
    pub n_detectors: Option<usize>,
}

impl GeometryConfig {
    pub fn resolve(&self, side: usize) -> Result<ProjectionGeometry> {
        let d = ProjectionGeometry::default_for(side);
        let g = ProjectionGeometry::parallel(
            self.n_angles.unwrap_or(d.n_angles()),
            self.n_detectors.unwrap_or(d.n_detectors),
            1.0,
            false,
        )?;
        g.check_coverage(side)?;
        Ok(g)
    }
}

/// Degradation run configuration (the on-disk JSON document).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradeConfig {
    pub method: DegradeMethod,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub simple: SimpleNoiseParams,
    #[serde(default)]
    pub physics: PhysicsNoiseParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
}

fn default_window() -> [f64; 2] {
    [-1200.0, 600.0]
}

impl DegradeConfig {
    pub fn new(method: DegradeMethod) -> Self {
        DegradeConfig {
            method,
            geometry: GeometryConfig::default(),
            simple: SimpleNoiseParams::default(),
            physics: PhysicsNoiseParams::default(),
            seed: 0,
            window: default_window(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            DegradeMethod::SimpleSinogram => self.simple.validate()?,
            DegradeMethod::PhysicsSinogram => self.physics.validate()?,
        }
        if !(self.window[0] < self.window[1]) {
            return Err(Error::Param("degradation clamp window is empty".into()));
        }
        Ok(())
    }
}

pub fn hu_to_mu(hu: f64) -> f64 {
    (MU_WATER_PER_MM * (1.0 + hu / 1000.0)).max(0.0)
}

pub fn mu_to_hu(mu: f64) -> f64 {
    1000.0 * (mu / MU_WATER_PER_MM - 1.0)
}

/// Radon → noise → FBP for one HU slice; the result is clamped to `window`.
pub fn degrade_slice(
    slice: &Image2,
    pixel_size: f64,
    geom: &ProjectionGeometry,
    cfg: &DegradeConfig,
    stream: RngStream,
) -> Result<Image2> {
    let mu = slice.map(hu_to_mu);
    let sino = radon(&mu, geom, pixel_size)?;
    let mut rng = stream.rng();
    let noisy = match cfg.method {
        DegradeMethod::SimpleSinogram => degrade_sinogram_simple(&sino, &cfg.simple, &mut rng)?,
        DegradeMethod::PhysicsSinogram => degrade_sinogram_physics(&sino, &cfg.physics, &mut rng)?,
    };
    let rec = fbp(&noisy, slice.rows())?;
    let (lo, hi) = (cfg.window[0], cfg.window[1]);
    let out = rec.map(|m| mu_to_hu(m).clamp(lo, hi));
    if !out.is_finite() {
        return Err(Error::Numerical("degraded slice holds non-finite values".into()));
    }
    Ok(out)
}

/// Degrades every axial slice of an HU volume. Slice `z` draws from the
/// substream `(subject, z)` of `cfg.seed`, so the output does not depend on
/// the worker count.
pub fn degrade_volume(v: &CtVolume, cfg: &DegradeConfig, subject: &str) -> Result<CtVolume> {
    cfg.validate()?;
    if v.unit() != IntensityUnit::Hu {
        return Err(Error::Unit {
            expected: IntensityUnit::Hu,
            found: v.unit(),
        });
    }
    let d = v.dims();
    if d.nx != d.ny {
        return Err(Error::Shape(format!(
            "axial slices must be square, got {}x{}",
            d.nx, d.ny
        )));
    }
    let sp = v.spacing();
    if (sp[0] - sp[1]).abs() > 1e-9 * sp[0] {
        return Err(Error::Shape("in-plane spacing must be isotropic".into()));
    }
    let geom = cfg.geometry.resolve(d.nx)?;
    let root = RngStream::new(cfg.seed);
    let slices = (0..d.nz)
        .into_par_iter()
        .map(|z| degrade_slice(&v.slice(z), sp[0], &geom, cfg, root.substream(subject, z as u64)))
        .collect::<Result<Vec<_>>>()?;
    CtVolume::from_slices(v, &slices, IntensityUnit::Hu)
}
