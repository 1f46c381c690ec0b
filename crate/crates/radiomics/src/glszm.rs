//! Gray-level size-zone matrix (26-connected zones) and its 16 features.

use crate::grid::neighbors_26;
use crate::roi::LevelGrid;
use crate::runs::{size_stats, SizeMatrix};

pub const GLSZM_FEATURES: [&str; 16] = [
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
];

/// Zones are 26-connected components of equal level.
pub fn glszm_matrix(lv: &LevelGrid) -> SizeMatrix {
    let g = &lv.levels;
    let offsets: Vec<[isize; 3]> = neighbors_26().collect();
    let mut seen = vec![false; g.len()];
    let mut zones: Vec<(u8, usize)> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..g.len() {
        let l = g.data()[start];
        if l == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let p = g.coords(i);
            for &d in &offsets {
                if let Some(q) = g.offset(p, d) {
                    if !seen[q] && g.data()[q] == l {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        zones.push((l, size));
    }
    let max_size = zones.iter().map(|z| z.1).max().unwrap_or(1);
    let mut m = SizeMatrix::zeros(lv.bins, max_size);
    for (l, s) in zones {
        m.add(l, s);
    }
    m
}

pub fn glszm_features(lv: &LevelGrid) -> Vec<f64> {
    let m = glszm_matrix(lv);
    let s = size_stats(&m);
    vec![
        s.small,
        s.large,
        s.gln,
        s.glnn,
        s.sn,
        s.snn,
        s.total / lv.voxel_count() as f64,
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
