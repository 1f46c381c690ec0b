//! Nonparametric tests used to compare methods over paired bootstrap draws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{MlError, Result};
use crate::rank::midranks;

/// Largest number of non-zero differences handled by the exact
/// signed-rank distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    #[serde(rename = "stat")]
    pub statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
}

/// Friedman test with tie correction. `blocks[i][j]` is the score of
/// treatment `j` in block `i`.
pub fn friedman(blocks: &[Vec<f64>]) -> Result<TestResult> {
    let n = blocks.len();
    if n < 2 {
        return Err(MlError::Insufficient("Friedman test needs at least two blocks".into()));
    }
    let k = blocks[0].len();
    if k < 2 {
        return Err(MlError::Param("Friedman test needs at least two treatments".into()));
    }
    if blocks.iter().any(|b| b.len() != k) {
        return Err(MlError::Shape("ragged Friedman blocks".into()));
    }
    if blocks.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MlError::Numerical("non-finite value in Friedman blocks".into()));
    }
    let mut sums = vec![0.0; k];
    let mut ties = 0.0;
    for b in blocks {
        let (r, t) = midranks(b);
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
        ties += t;
    }
    let (nf, kf) = (n as f64, k as f64);
    let denom = 1.0 - ties / (nf * (kf * kf * kf - kf));
    if denom <= 1e-12 {
        return Ok(TestResult { statistic: 0.0, p_value: 1.0 });
    }
    let ss: f64 = sums.iter().map(|r| r * r).sum();
    let q = ((12.0 / (nf * kf * (kf + 1.0))) * ss - 3.0 * nf * (kf + 1.0)) / denom;
    let q = q.max(0.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| MlError::Numerical(e.to_string()))?;
    Ok(TestResult { statistic: q, p_value: chi.sf(q) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_nonzero: usize,
    pub exact: bool,
}

impl WilcoxonResult {
    /// All differences were zero.
    pub fn degenerate(&self) -> bool {
        self.n_nonzero == 0
    }
}

/// Counts of subset sums of integer weights: `c[s]` is the number of
/// sign assignments whose positive weights sum to `s`.
fn subset_sum_counts(weights: &[usize]) -> Vec<f64> {
    let total: usize = weights.iter().sum();
    let mut c = vec![0.0; total + 1];
    c[0] = 1.0;
    let mut reach = 0;
    for &w in weights {
        for s in (0..=reach).rev() {
            if c[s] > 0.0 {
                c[s + w] += c[s];
            }
        }
        reach += w;
    }
    c
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero
/// differences are dropped; the statistic is `min(W+, W-)`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(MlError::Shape(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(MlError::Numerical("non-finite paired difference".into()));
    }
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult { statistic: 0.0, p_value: 1.0, n_nonzero: 0, exact: true });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let nf = n as f64;
    let w_minus = nf * (nf + 1.0) / 2.0 - w_plus;
    let w = w_plus.min(w_minus);
    let exact = n <= WILCOXON_EXACT_MAX;
    let p = if exact {
        // Midranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let counts = subset_sum_counts(&doubled);
        let limit = (2.0 * w).round() as usize;
        let tail: f64 = counts[..=limit.min(counts.len() - 1)].iter().sum();
        2.0 * tail / 2f64.powi(n as i32)
    } else {
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let z = (w - mean + 0.5).min(0.0) / var.sqrt();
            2.0 * Normal::standard().cdf(z)
        }
    };
    Ok(WilcoxonResult { statistic: w, p_value: p.min(1.0), n_nonzero: n, exact })
}

/// Bonferroni adjustment for `m` comparisons.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

pub fn bonferroni_adjust(p: &[f64], m: usize) -> Vec<f64> {
    p.iter().map(|&v| bonferroni(v, m)).collect()
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 100.0) / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friedman_consistent_ranking() {
        let b = vec![vec![1.0, 2.0, 3.0]; 3];
        let r = friedman(&b).unwrap();
        assert!((r.statistic - 6.0).abs() < 1e-12);
        assert!((r.p_value - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn friedman_all_tied() {
        let r = friedman(&vec![vec![0.5, 0.5, 0.5]; 10]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn wilcoxon_all_positive_six() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&a, &[0.0; 6]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.03125).abs() < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 50.0), 2.5);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
    }
}
