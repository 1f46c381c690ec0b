//! Run configuration: one JSON document with a section per command.

use std::path::Path;

use dosesim_core::degrade::{DegradeConfig, DegradeMethod};
use dosesim_core::metrics::SsimParams;
use dosesim_core::phantom::DatasetSpec;
use dosesim_ml::{BootstrapConfig, TrainConfig};
use dosesim_radiomics::{ExtractionConfig, PerturbMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for commands without a section seed; `--seed` overrides all.
    pub seed: Option<u64>,
    pub phantom: DatasetSpec,
    pub degrade: DegradeConfig,
    pub metrics: MetricsConfig,
    pub radiomics: RadiomicsConfig,
    pub train: TrainConfig,
    pub evaluate: BootstrapConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            phantom: DatasetSpec::default(),
            degrade: DegradeConfig::new(DegradeMethod::PhysicsSinogram),
            metrics: MetricsConfig::default(),
            radiomics: RadiomicsConfig::default(),
            train: TrainConfig::default(),
            evaluate: BootstrapConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub patch_size: usize,
    /// HU window mapped onto [0, 1] before patch metrics.
    pub window: [f64; 2],
    pub ssim: SsimParams,
    pub ms_ssim_scales: usize,
    pub kid_subset_size: usize,
    pub kid_subsets: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            patch_size: 128,
            window: [-1200.0, 600.0],
            ssim: SsimParams::default(),
            ms_ssim_scales: 5,
            kid_subset_size: 100,
            kid_subsets: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub mode: PerturbMode,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiomicsConfig {
    pub extraction: ExtractionConfig,
    /// One perturbed feature table is written per entry.
    pub perturbations: Vec<PerturbationConfig>,
}

impl Default for RadiomicsConfig {
    fn default() -> Self {
        RadiomicsConfig {
            extraction: ExtractionConfig::default(),
            perturbations: vec![
                PerturbationConfig { mode: PerturbMode::Dilate, magnitude: 0.15 },
                PerturbationConfig { mode: PerturbMode::Erode, magnitude: 0.15 },
                PerturbationConfig { mode: PerturbMode::ContourNoise, magnitude: 0.15 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub alpha: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { alpha: 0.05 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies a command-line seed to every seeded section.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = Some(s);
            self.degrade.seed = s;
            self.evaluate.seed = s;
        }
        self
    }

    pub fn global_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.phantom;
        if p.n_subjects == 0 || p.dims.iter().any(|&d| d == 0) || p.spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(CliError::Config("phantom: empty dims or non-positive spacing".into()));
        }
        if !(0.0..=1.0).contains(&p.malignant_fraction) {
            return Err(CliError::Config("phantom: malignant_fraction outside [0, 1]".into()));
        }
        self.degrade.validate()?;
        let m = &self.metrics;
        if m.patch_size == 0 || !(m.window[0] < m.window[1]) || m.ms_ssim_scales == 0 || m.ms_ssim_scales > 5 {
            return Err(CliError::Config("metrics: invalid patch size, window or scale count".into()));
        }
        if m.kid_subset_size < 2 || m.kid_subsets == 0 {
            return Err(CliError::Config("metrics: KID needs subsets of at least 2".into()));
        }
        self.radiomics.extraction.validate()?;
        for pc in &self.radiomics.perturbations {
            dosesim_radiomics::PerturbationSpec::new(pc.mode, pc.magnitude, 0)?;
        }
        self.train.validate()?;
        let e = &self.evaluate;
        if e.n_iterations == 0 || !(e.resample_fraction > 0.0 && e.resample_fraction <= 1.0) {
            return Err(CliError::Config("evaluate: invalid bootstrap settings".into()));
        }
        if !(self.compare.alpha > 0.0 && self.compare.alpha < 1.0) {
            return Err(CliError::Config("compare: alpha outside (0, 1)".into()));
        }
        Ok(())
    }
}
