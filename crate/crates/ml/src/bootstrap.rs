//! Bootstrap confidence intervals of test-set metrics at a frozen threshold.

use std::collections::BTreeMap;

use dosesim_core::rng::RngStream;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};
use crate::roc::{binary_metrics, BinaryMetrics};
use crate::stats::percentile;

/// Redraws allowed when a resample contains a single class.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_iterations: usize,
    /// Resample size as a fraction of the test set.
    pub resample_fraction: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { n_iterations: 1000, resample_fraction: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDistribution {
    pub point: f64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub seed: u64,
    pub n_iterations: usize,
    pub n_samples: usize,
    pub resample_size: usize,
    pub threshold: f64,
    pub metrics: BTreeMap<String, MetricDistribution>,
}

/// Resamples `(scores, labels)` with replacement. Iteration `i` draws
/// from substream ("bootstrap", i) so that methods scored on the same
/// test set with the same seed see identical resamples.
pub fn bootstrap_metrics(scores: &[f64], labels: &[u8], threshold: f64, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    if scores.len() != labels.len() {
        return Err(MlError::Shape("scores and labels differ in length".into()));
    }
    if cfg.n_iterations == 0 {
        return Err(MlError::Param("bootstrap needs at least one iteration".into()));
    }
    if !(cfg.resample_fraction > 0.0 && cfg.resample_fraction <= 1.0) {
        return Err(MlError::Param("resample_fraction outside (0, 1]".into()));
    }
    let point = binary_metrics(scores, labels, threshold)?;
    let n = scores.len();
    let m = ((n as f64 * cfg.resample_fraction).round() as usize).max(2);
    let root = RngStream::new(cfg.seed);
    let draws: Vec<BinaryMetrics> = (0..cfg.n_iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream("bootstrap", i as u64).rng();
            for _ in 0..MAX_REDRAWS {
                let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
                let l: Vec<u8> = idx.iter().map(|&j| labels[j]).collect();
                if l.iter().all(|&v| v == l[0]) {
                    continue;
                }
                let s: Vec<f64> = idx.iter().map(|&j| scores[j]).collect();
                return binary_metrics(&s, &l, threshold);
            }
            Err(MlError::Insufficient(format!("bootstrap iteration {i}: single-class resample after {MAX_REDRAWS} draws")))
        })
        .collect::<Result<_>>()?;
    let mut metrics = BTreeMap::new();
    for (j, name) in BinaryMetrics::NAMES.iter().enumerate() {
        let values: Vec<f64> = draws.iter().map(|d| d.values()[j]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        metrics.insert(
            name.to_string(),
            MetricDistribution {
                point: point.values()[j],
                mean,
                ci_lo: percentile(&values, 2.5),
                ci_hi: percentile(&values, 97.5),
                values,
            },
        );
    }
    Ok(BootstrapResult { seed: cfg.seed, n_iterations: cfg.n_iterations, n_samples: n, resample_size: m, threshold, metrics })
}
