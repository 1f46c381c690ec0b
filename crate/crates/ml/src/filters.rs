//! Stability (ICC), discriminative (Mann-Whitney U) and redundancy
//! (Spearman) feature filters.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::FeatureMatrix;
use crate::error::{MlError, Result};
use crate::rank::{midranks, spearman};

/// Two-way random-effects, absolute-agreement, single-measure ICC for an
/// `n` subjects × `k` raters table. A table with no variation at all
/// counts as perfect agreement.
pub fn icc_a1(table: &[Vec<f64>]) -> Result<f64> {
    let n = table.len();
    let k = table.first().map_or(0, Vec::len);
    if n < 2 || k < 2 || table.iter().any(|r| r.len() != k) {
        return Err(MlError::Shape("ICC needs at least 2 subjects × 2 raters".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = table.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = table.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k).map(|j| table.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let sst: f64 = table.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ssr = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ssc = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let sse = (sst - ssr - ssc).max(0.0);
    let msr = ssr / (nf - 1.0);
    let msc = ssc / (kf - 1.0);
    let mse = sse / ((nf - 1.0) * (kf - 1.0));
    let den = msr + (kf - 1.0) * mse + kf * (msc - mse) / nf;
    // Relative guard: rounding leaves ~1e-30 residue on exact agreement.
    if den <= 1e-12 * sst.max(f64::MIN_POSITIVE) || den == 0.0 {
        return Ok(1.0);
    }
    Ok((msr - mse) / den)
}

/// ICC per feature across the original extraction and each perturbed
/// re-extraction (rows matched by position).
pub fn feature_iccs(original: &FeatureMatrix, perturbed: &[FeatureMatrix]) -> Result<Vec<f64>> {
    if perturbed.is_empty() {
        return Err(MlError::Param("stability needs at least one perturbed extraction".into()));
    }
    for p in perturbed {
        if p.names != original.names || p.ids != original.ids || p.groups != original.groups {
            return Err(MlError::Shape("perturbed rows do not match the original extraction".into()));
        }
    }
    (0..original.n_features())
        .map(|j| {
            let table: Vec<Vec<f64>> = (0..original.n_samples())
                .map(|i| std::iter::once(original.x[(i, j)]).chain(perturbed.iter().map(|p| p.x[(i, j)])).collect())
                .collect();
            icc_a1(&table)
        })
        .collect()
}

/// Features with ICC at or above `threshold`; negative ICCs count as 0.
pub fn stability_filter(original: &FeatureMatrix, perturbed: &[FeatureMatrix], threshold: f64) -> Result<Vec<String>> {
    let icc = feature_iccs(original, perturbed)?;
    Ok(original
        .names
        .iter()
        .zip(&icc)
        .filter(|(_, &v)| v.max(0.0) >= threshold)
        .map(|(n, _)| n.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the positive class.
    pub u: f64,
    pub p: f64,
}

/// Number of ways to reach each U with `m` and `n` untied observations.
fn exact_u_counts(m: usize, n: usize) -> Vec<f64> {
    // c[i][j][u]: arrangements of i x's and j y's with statistic u.
    let max_u = m * n;
    let mut prev: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; n + 1];
    for row in prev.iter_mut() {
        row[0] = 1.0;
    }
    for _ in 0..m {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; n + 1];
        cur[0][0] = 1.0;
        for j in 1..=n {
            for u in 0..=max_u {
                // Largest element is an x (beats all j y's) or a y.
                let a = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = a + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev[n].clone()
}

/// Two-sided Mann-Whitney U test. Exact when both groups have at most 8
/// samples and there are no ties; otherwise the normal approximation with
/// tie-corrected variance and continuity correction.
pub fn mann_whitney(neg: &[f64], pos: &[f64]) -> Result<MannWhitney> {
    let (n0, n1) = (neg.len(), pos.len());
    if n0 == 0 || n1 == 0 {
        return Err(MlError::SingleClass("Mann-Whitney needs both groups".into()));
    }
    let all: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let (ranks, ties) = midranks(&all);
    let r1: f64 = ranks[..n1].iter().sum();
    let (a, b) = (n1 as f64, n0 as f64);
    let u = r1 - a * (a + 1.0) / 2.0;
    let nt = a + b;
    if ties == 0.0 && n0 <= 8 && n1 <= 8 {
        let counts = exact_u_counts(n1, n0);
        let total: f64 = counts.iter().sum();
        let ui = u.round() as usize;
        let lo: f64 = counts[..=ui].iter().sum::<f64>() / total;
        let hi: f64 = counts[ui..].iter().sum::<f64>() / total;
        return Ok(MannWhitney { u, p: (2.0 * lo.min(hi)).min(1.0) });
    }
    let mean = a * b / 2.0;
    let var = a * b / 12.0 * ((nt + 1.0) - ties / (nt * (nt - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0 });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = 2.0 * (1.0 - Normal::standard().cdf(z));
    Ok(MannWhitney { u, p: p.min(1.0) })
}

/// Per-feature Mann-Whitney p-values.
pub fn feature_pvalues(fm: &FeatureMatrix) -> Result<Vec<f64>> {
    fm.require_both_classes("discriminative analysis")?;
    (0..fm.n_features())
        .map(|j| {
            let col = fm.column(j);
            let (mut neg, mut pos) = (Vec::new(), Vec::new());
            for (v, &l) in col.iter().zip(&fm.labels) {
                if l == 1 { pos.push(*v) } else { neg.push(*v) }
            }
            Ok(mann_whitney(&neg, &pos)?.p)
        })
        .collect()
}

/// Features with p strictly below `threshold`, with their p-values.
pub fn discriminative_filter(fm: &FeatureMatrix, threshold: f64) -> Result<Vec<(String, f64)>> {
    let p = feature_pvalues(fm)?;
    Ok(fm
        .names
        .iter()
        .zip(p)
        .filter(|(_, p)| *p < threshold)
        .map(|(n, p)| (n.clone(), p))
        .collect())
}

/// Greedy redundancy removal. Candidates are visited by ascending p (ties
/// in input order); a feature is dropped when `|ρ| > threshold` against
/// any already kept feature.
pub fn redundancy_filter(fm: &FeatureMatrix, candidates: &[(String, f64)], threshold: f64) -> Result<Vec<String>> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].1.total_cmp(&candidates[b].1).then(a.cmp(&b)));
    let mut kept: Vec<(String, Vec<f64>)> = Vec::new();
    for i in order {
        let name = &candidates[i].0;
        let j = fm.column_index(name).ok_or_else(|| MlError::Shape(format!("missing feature {name}")))?;
        let col = fm.column(j);
        if kept.iter().all(|(_, k)| spearman(&col, k).abs() <= threshold) {
            kept.push((name.clone(), col));
        }
    }
    Ok(kept.into_iter().map(|(n, _)| n).collect())
}
