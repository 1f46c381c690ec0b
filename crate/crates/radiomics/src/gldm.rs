//! Gray-level dependence matrix (26-neighbourhood, exact-match dependence)
//! and its 14 features.

use crate::grid::neighbors_26;
use crate::roi::LevelGrid;
use crate::runs::{size_stats, SizeMatrix};

pub const GLDM_FEATURES: [&str; 14] = [
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
];

/// Dependence of a voxel is one plus the number of ROI neighbours sharing
/// its level, so columns run 1..=27.
pub fn gldm_matrix(lv: &LevelGrid) -> SizeMatrix {
    let g = &lv.levels;
    let offsets: Vec<[isize; 3]> = neighbors_26().collect();
    let mut m = SizeMatrix::zeros(lv.bins, offsets.len() + 1);
    for (idx, &l) in g.data().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let p = g.coords(idx);
        let dep = 1 + offsets
            .iter()
            .filter(|&&d| g.offset(p, d).is_some_and(|q| g.data()[q] == l))
            .count();
        m.add(l, dep);
    }
    m
}

pub fn gldm_features(lv: &LevelGrid) -> Vec<f64> {
    let s = size_stats(&gldm_matrix(lv));
    vec![
        s.small,
        s.large,
        s.gln,
        s.sn,
        s.snn,
        s.glv,
        s.sv,
        s.entropy,
        s.low,
        s.high,
        s.small_low,
        s.small_high,
        s.large_low,
        s.large_high,
    ]
}
