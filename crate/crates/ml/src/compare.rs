//! Statistical comparison of methods over aligned bootstrap distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapResult;
use crate::error::{MlError, Result};
use crate::stats::{bonferroni, friedman, wilcoxon_signed_rank, TestResult};

pub const COMPARISON_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    pub a: String,
    pub b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub friedman: TestResult,
    pub significant: bool,
    /// Empty unless the omnibus test rejects.
    pub pairwise: Vec<Pairwise>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub methods: BTreeMap<String, BTreeMap<String, Summary>>,
    pub tests: BTreeMap<String, MetricComparison>,
}

/// Friedman per metric over paired bootstrap iterations, followed by
/// Bonferroni-corrected pairwise Wilcoxon tests when it rejects at `alpha`.
pub fn compare_methods(results: &[(String, BootstrapResult)], alpha: f64) -> Result<ComparisonReport> {
    if results.len() < 2 {
        return Err(MlError::Param("comparison needs at least two methods".into()));
    }
    let (_, first) = &results[0];
    for (name, r) in results {
        if r.seed != first.seed || r.n_iterations != first.n_iterations || r.n_samples != first.n_samples {
            return Err(MlError::Param(format!(
                "bootstrap of {name} is not aligned (seed {}, {} iterations, n {}) with {} (seed {}, {} iterations, n {})",
                r.seed, r.n_iterations, r.n_samples, results[0].0, first.seed, first.n_iterations, first.n_samples
            )));
        }
    }
    let mut names: Vec<&str> = results.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(MlError::Param("duplicate method name".into()));
    }
    let k = results.len();
    let m = k * (k - 1) / 2;
    let mut methods = BTreeMap::new();
    for (name, r) in results {
        let s = r.metrics.iter().map(|(metric, d)| (metric.clone(), Summary { mean: d.mean, ci_lo: d.ci_lo, ci_hi: d.ci_hi })).collect();
        methods.insert(name.clone(), s);
    }
    let mut tests = BTreeMap::new();
    for metric in first.metrics.keys() {
        let series: Vec<&Vec<f64>> = results
            .iter()
            .map(|(n, r)| r.metrics.get(metric).map(|d| &d.values).ok_or_else(|| MlError::Param(format!("{n} lacks metric {metric}"))))
            .collect::<Result<_>>()?;
        let blocks: Vec<Vec<f64>> = (0..first.n_iterations).map(|i| series.iter().map(|s| s[i]).collect()).collect();
        let fr = friedman(&blocks)?;
        let significant = fr.p_value < alpha;
        let mut pairwise = Vec::new();
        if significant {
            for a in 0..k {
                for b in a + 1..k {
                    let w = wilcoxon_signed_rank(series[a], series[b])?;
                    let p_adjusted = bonferroni(w.p_value, m);
                    pairwise.push(Pairwise {
                        a: results[a].0.clone(),
                        b: results[b].0.clone(),
                        statistic: w.statistic,
                        p_value: w.p_value,
                        p_adjusted,
                        significant: p_adjusted < alpha,
                    });
                }
            }
        }
        tests.insert(metric.clone(), MetricComparison { friedman: fr, significant, pairwise });
    }
    Ok(ComparisonReport { schema_version: COMPARISON_SCHEMA_VERSION, alpha, methods, tests })
}
