//! ROC curves, AUC, the (0, 1)-distance operating point and thresholded
//! classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};
use crate::rank::midranks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    /// Point `i` predicts positive for scores `>= thresholds[i]`; the first
    /// point is the empty prediction (`+inf`).
    pub thresholds: Vec<f64>,
}

fn class_sizes(labels: &[u8]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MlError::SingleClass("ROC needs both classes".into()));
    }
    Ok((neg, pos))
}

pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(MlError::Shape("scores and labels differ in length".into()));
    }
    let (neg, pos) = class_sizes(labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut curve = RocCurve {
        fpr: vec![0.0],
        tpr: vec![0.0],
        thresholds: vec![f64::INFINITY],
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let t = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == t {
            if labels[idx[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.fpr.push(fp as f64 / neg as f64);
        curve.tpr.push(tp as f64 / pos as f64);
        curve.thresholds.push(t);
    }
    Ok(curve)
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.fpr
            .windows(2)
            .zip(self.tpr.windows(2))
            .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
            .sum()
    }
}

/// AUC as the Mann-Whitney statistic `U / (n⁺ n⁻)` with midranks.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(MlError::Shape("scores and labels differ in length".into()));
    }
    let (neg, pos) = class_sizes(labels)?;
    let (ranks, _) = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let (np, nn) = (pos as f64, neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Operating point closest to (fpr 0, tpr 1). Ties go to the lower
/// threshold (more sensitive). Returns `(threshold, distance)`.
pub fn optimal_threshold(roc: &RocCurve) -> Result<(f64, f64)> {
    if roc.thresholds.is_empty() {
        return Err(MlError::Param("empty ROC curve".into()));
    }
    let mut best = (f64::INFINITY, f64::INFINITY);
    for i in 0..roc.thresholds.len() {
        let d = (roc.fpr[i].powi(2) + (1.0 - roc.tpr[i]).powi(2)).sqrt();
        // Thresholds descend, so `<=` keeps the lowest among ties.
        if d <= best.1 + 1e-12 {
            best = (roc.thresholds[i], d.min(best.1));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub auc: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl BinaryMetrics {
    /// Unweighted mean of the four metrics.
    pub fn mean(&self) -> f64 {
        (self.auc + self.balanced_accuracy + self.sensitivity + self.specificity) / 4.0
    }

    pub const NAMES: [&'static str; 4] = ["auc", "balanced_accuracy", "sensitivity", "specificity"];

    pub fn values(&self) -> [f64; 4] {
        [self.auc, self.balanced_accuracy, self.sensitivity, self.specificity]
    }
}

/// Sensitivity and specificity with positives predicted at `score >= threshold`.
pub fn sensitivity_specificity(scores: &[f64], labels: &[u8], threshold: f64) -> Result<(f64, f64)> {
    let (neg, pos) = class_sizes(labels)?;
    let mut tp = 0usize;
    let mut tn = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let p = s >= threshold;
        if l == 1 && p {
            tp += 1;
        } else if l == 0 && !p {
            tn += 1;
        }
    }
    Ok((tp as f64 / pos as f64, tn as f64 / neg as f64))
}

pub fn binary_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<BinaryMetrics> {
    let auc = roc_auc(scores, labels)?;
    let (sensitivity, specificity) = sensitivity_specificity(scores, labels, threshold)?;
    Ok(BinaryMetrics {
        auc,
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        sensitivity,
        specificity,
    })
}
