//! Gray-level run-length matrices and their 16 features.

use crate::glcm::average;
use crate::grid::DIRECTIONS_13;
use crate::roi::LevelGrid;
use crate::runs::{size_stats, SizeMatrix};

pub const GLRLM_FEATURES: [&str; 16] = [
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
];

/// Run-length matrix for each of the 13 directions. A run is a maximal
/// chain of equal-level ROI voxels along the direction.
pub fn glrlm_matrices(lv: &LevelGrid) -> Vec<SizeMatrix> {
    let g = &lv.levels;
    let max_len = g.dims().iter().copied().max().unwrap_or(1);
    DIRECTIONS_13
        .iter()
        .map(|&d| {
            let back = [-d[0], -d[1], -d[2]];
            let mut m = SizeMatrix::zeros(lv.bins, max_len);
            for (idx, &l) in g.data().iter().enumerate() {
                if l == 0 {
                    continue;
                }
                let p = g.coords(idx);
                if g.offset(p, back).is_some_and(|q| g.data()[q] == l) {
                    continue;
                }
                let mut len = 1;
                let mut cur = p;
                while let Some(q) = g.offset(cur, d) {
                    if g.data()[q] != l {
                        break;
                    }
                    len += 1;
                    cur = g.coords(q);
                }
                m.add(l, len);
            }
            m
        })
        .collect()
}

pub fn glrlm_features_of(m: &SizeMatrix, n_voxels: usize) -> Vec<f64> {
    let s = size_stats(m);
    vec![
        s.small,
        s.large,
        s.gln,
        s.glnn,
        s.sn,
        s.snn,
        s.total / n_voxels as f64,
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

/// Direction-averaged run-length features.
pub fn glrlm_features(lv: &LevelGrid) -> Vec<f64> {
    let n = lv.voxel_count();
    average(glrlm_matrices(lv).iter().map(|m| glrlm_features_of(m, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;

    #[test]
    fn constant_block_runs_span_extent() {
        let lv = LevelGrid::new(Grid3::filled([5, 3, 2], 2), 4).unwrap();
        let mats = glrlm_matrices(&lv);
        // Along x every run covers the full 5-voxel extent.
        assert_eq!(mats[0].get(2, 5), 6.0);
        assert_eq!(mats[0].total(), 6.0);
        let f = glrlm_features_of(&mats[0], 30);
        assert_eq!(f[1], 25.0);
        assert_eq!(f[6], 0.2);
    }

    #[test]
    fn runs_break_on_level_change() {
        let g = Grid3::from_vec([6, 1, 1], vec![1, 1, 2, 2, 2, 1]);
        let m = &glrlm_matrices(&LevelGrid::new(g, 2).unwrap())[0];
        assert_eq!(m.get(1, 2), 1.0);
        assert_eq!(m.get(2, 3), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.total(), 3.0);
    }
}
