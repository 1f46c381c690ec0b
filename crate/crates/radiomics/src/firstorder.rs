//! First-order intensity statistics over the ROI voxels.

use crate::error::{RadiomicsError, Result};
use crate::roi::{LevelGrid, Roi};

pub const FIRSTORDER_FEATURES: [&str; 18] = [
    "Energy",
    "TotalEnergy",
    "Entropy",
    "Minimum",
    "10Percentile",
    "90Percentile",
    "Maximum",
    "Mean",
    "Median",
    "InterquartileRange",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "Kurtosis",
    "Variance",
    "Uniformity",
];

/// Linear-interpolation percentile of sorted data (`q` in [0, 100]).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The 18 first-order features in `FIRSTORDER_FEATURES` order. Moments use
/// the population normalization; entropy and uniformity use the discretized
/// histogram (log base 2). Skewness and kurtosis of a zero-variance ROI are 0.
pub fn firstorder_features(roi: &Roi, levels: &LevelGrid) -> Result<Vec<f64>> {
    let mut v = roi.masked_values();
    if v.is_empty() {
        return Err(RadiomicsError::EmptyMask);
    }
    let n = v.len() as f64;
    v.sort_by(f64::total_cmp);
    let energy: f64 = v.iter().map(|x| x * x).sum();
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let p10 = percentile(&v, 10.0);
    let p90 = percentile(&v, 90.0);
    let robust: Vec<f64> = v.iter().copied().filter(|&x| x >= p10 && x <= p90).collect();
    // Two-voxel ROIs leave nothing between the interpolated percentiles.
    let rmad = if robust.is_empty() {
        0.0
    } else {
        let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
        robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / robust.len() as f64
    };

    let mut hist = vec![0.0; levels.bins + 1];
    for &l in levels.levels.data() {
        if l > 0 {
            hist[l as usize] += 1.0;
        }
    }
    let total: f64 = hist.iter().sum();
    let (mut entropy, mut uniformity) = (0.0, 0.0);
    for &c in &hist[1..] {
        if c > 0.0 {
            let p = c / total;
            entropy -= p * p.log2();
            uniformity += p * p;
        }
    }

    Ok(vec![
        energy,
        energy * roi.voxel_volume(),
        entropy,
        v[0],
        p10,
        p90,
        v[v.len() - 1],
        mean,
        percentile(&v, 50.0),
        percentile(&v, 75.0) - percentile(&v, 25.0),
        v[v.len() - 1] - v[0],
        v.iter().map(|x| (x - mean).abs()).sum::<f64>() / n,
        rmad,
        (energy / n).sqrt(),
        skew,
        kurt,
        m2,
        uniformity,
    ])
}
