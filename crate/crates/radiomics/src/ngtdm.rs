//! Neighbouring gray-tone difference matrix (26-neighbourhood) and its
//! five features.

use crate::grid::neighbors_26;
use crate::roi::LevelGrid;

pub const NGTDM_FEATURES: [&str; 5] = ["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"];

/// Coarseness reported when every level has zero difference sum.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level voxel counts `n` and absolute difference sums `s`. Voxels with
/// no ROI neighbour are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Ngtdm {
    pub n: Vec<f64>,
    pub s: Vec<f64>,
}

pub fn ngtdm_matrix(lv: &LevelGrid) -> Ngtdm {
    let g = &lv.levels;
    let offsets: Vec<[isize; 3]> = neighbors_26().collect();
    let mut m = Ngtdm {
        n: vec![0.0; lv.bins],
        s: vec![0.0; lv.bins],
    };
    for (idx, &l) in g.data().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let p = g.coords(idx);
        let (mut sum, mut cnt) = (0.0, 0usize);
        for &d in &offsets {
            if let Some(q) = g.offset(p, d) {
                let v = g.data()[q];
                if v > 0 {
                    sum += v as f64;
                    cnt += 1;
                }
            }
        }
        if cnt == 0 {
            continue;
        }
        let k = l as usize - 1;
        m.n[k] += 1.0;
        m.s[k] += (l as f64 - sum / cnt as f64).abs();
    }
    m
}

pub fn ngtdm_features_of(m: &Ngtdm) -> Vec<f64> {
    let nvp: f64 = m.n.iter().sum();
    if nvp == 0.0 {
        return vec![COARSENESS_CAP, 0.0, 0.0, 0.0, 0.0];
    }
    // (level, p, s) for occupied levels.
    let occ: Vec<(f64, f64, f64)> = m
        .n
        .iter()
        .zip(&m.s)
        .enumerate()
        .filter(|(_, (&n, _))| n > 0.0)
        .map(|(k, (&n, &s))| ((k + 1) as f64, n / nvp, s))
        .collect();
    let ngp = occ.len() as f64;
    let ps: f64 = occ.iter().map(|&(_, p, s)| p * s).sum();
    let s_total: f64 = occ.iter().map(|o| o.2).sum();

    let coarseness = if ps == 0.0 { COARSENESS_CAP } else { 1.0 / ps };
    let (mut spread, mut busy_den, mut complexity, mut strength_num) = (0.0, 0.0, 0.0, 0.0);
    for &(i, pi, si) in &occ {
        for &(j, pj, sj) in &occ {
            spread += pi * pj * (i - j).powi(2);
            busy_den += (i * pi - j * pj).abs();
            complexity += (i - j).abs() * (pi * si + pj * sj) / (pi + pj);
            strength_num += (pi + pj) * (i - j).powi(2);
        }
    }
    let contrast = if ngp > 1.0 {
        spread / (ngp * (ngp - 1.0)) * s_total / nvp
    } else {
        0.0
    };
    let busyness = if busy_den == 0.0 { 0.0 } else { ps / busy_den };
    let strength = if s_total == 0.0 { 0.0 } else { strength_num / s_total };
    vec![coarseness, contrast, busyness, complexity / nvp, strength]
}

pub fn ngtdm_features(lv: &LevelGrid) -> Vec<f64> {
    ngtdm_features_of(&ngtdm_matrix(lv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;

    #[test]
    fn constant_roi() {
        let lv = LevelGrid::new(Grid3::filled([3, 3, 3], 4), 8).unwrap();
        assert_eq!(ngtdm_features(&lv), vec![COARSENESS_CAP, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_voxel_pair() {
        let g = Grid3::from_vec([2, 1, 1], vec![1, 3]);
        let m = ngtdm_matrix(&LevelGrid::new(g, 3).unwrap());
        assert_eq!(m.n, vec![1.0, 0.0, 1.0]);
        assert_eq!(m.s, vec![2.0, 0.0, 2.0]);
        let f = ngtdm_features_of(&m);
        assert_eq!(f[0], 0.5);
        // spread = 2 · 0.25 · 4 = 2, / (2·1) · 4/2
        assert_eq!(f[1], 2.0);
    }

    #[test]
    fn isolated_voxels_are_skipped() {
        let mut g = Grid3::filled([4, 1, 1], 0u8);
        g.set(0, 0, 0, 2);
        g.set(3, 0, 0, 1);
        let m = ngtdm_matrix(&LevelGrid::new(g, 2).unwrap());
        assert_eq!(m.n, vec![0.0, 0.0]);
        assert_eq!(ngtdm_features_of(&m)[0], COARSENESS_CAP);
    }
}
