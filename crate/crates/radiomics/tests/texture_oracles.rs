//! Texture matrices against brute-force enumeration over all voxel pairs
//! on small random ROIs.

use dosesim_radiomics::glcm::glcm_matrices;
use dosesim_radiomics::gldm::gldm_matrix;
use dosesim_radiomics::glrlm::glrlm_matrices;
use dosesim_radiomics::glszm::glszm_matrix;
use dosesim_radiomics::grid::{Grid3, DIRECTIONS_13};
use dosesim_radiomics::ngtdm::ngtdm_matrix;
use dosesim_radiomics::LevelGrid;
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

type Vox = (i64, i64, i64, u8);

fn voxels(lv: &LevelGrid) -> Vec<Vox> {
    let g = &lv.levels;
    (0..g.len())
        .filter(|&i| g.data()[i] > 0)
        .map(|i| {
            let c = g.coords(i);
            (c[0] as i64, c[1] as i64, c[2] as i64, g.data()[i])
        })
        .collect()
}

fn delta(a: &Vox, b: &Vox) -> (i64, i64, i64) {
    (b.0 - a.0, b.1 - a.1, b.2 - a.2)
}

fn chebyshev_one(a: &Vox, b: &Vox) -> bool {
    let (dx, dy, dz) = delta(a, b);
    dx.abs().max(dy.abs()).max(dz.abs()) == 1
}

fn level_grid() -> impl Strategy<Value = LevelGrid> {
    (1usize..=6, 1usize..=6, 1usize..=6, 1usize..=4)
        .prop_flat_map(|(x, y, z, bins)| {
            let n = x * y * z;
            (Just([x, y, z]), Just(bins), prop::collection::vec(0..=bins as u8, n))
        })
        .prop_filter("non-empty", |(_, _, v)| v.iter().any(|&l| l > 0))
        .prop_map(|(dims, bins, v)| LevelGrid::new(Grid3::from_vec(dims, v), bins).unwrap())
}

fn glcm_oracle(vs: &[Vox], d: [isize; 3], ng: usize) -> Vec<f64> {
    let mut m = vec![0.0; ng * ng];
    for a in vs {
        for b in vs {
            let (dx, dy, dz) = delta(a, b);
            let fwd = (dx, dy, dz) == (d[0] as i64, d[1] as i64, d[2] as i64);
            let bwd = (dx, dy, dz) == (-d[0] as i64, -d[1] as i64, -d[2] as i64);
            if fwd || bwd {
                m[(a.3 as usize - 1) * ng + b.3 as usize - 1] += 1.0;
            }
        }
    }
    m
}

/// Runs as maximal equal-level segments: collect, for every voxel, the set
/// of voxels reachable along ±d without changing level.
fn glrlm_oracle(vs: &[Vox], d: [isize; 3]) -> BTreeMap<(u8, usize), usize> {
    let lookup: BTreeMap<(i64, i64, i64), u8> = vs.iter().map(|v| ((v.0, v.1, v.2), v.3)).collect();
    let d = (d[0] as i64, d[1] as i64, d[2] as i64);
    let mut runs = BTreeSet::new();
    for v in vs {
        let mut members = vec![(v.0, v.1, v.2)];
        for sign in [-1, 1] {
            let mut p = (v.0, v.1, v.2);
            loop {
                p = (p.0 + sign * d.0, p.1 + sign * d.1, p.2 + sign * d.2);
                if lookup.get(&p) != Some(&v.3) {
                    break;
                }
                members.push(p);
            }
        }
        members.sort();
        runs.insert((v.3, members));
    }
    let mut out = BTreeMap::new();
    for (l, m) in runs {
        *out.entry((l, m.len())).or_insert(0) += 1;
    }
    out
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

fn glszm_oracle(vs: &[Vox]) -> BTreeMap<(u8, usize), usize> {
    let mut parent: Vec<usize> = (0..vs.len()).collect();
    for i in 0..vs.len() {
        for j in 0..vs.len() {
            if vs[i].3 == vs[j].3 && chebyshev_one(&vs[i], &vs[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut sizes: BTreeMap<usize, (u8, usize)> = BTreeMap::new();
    for i in 0..vs.len() {
        let r = find(&mut parent, i);
        sizes.entry(r).or_insert((vs[i].3, 0)).1 += 1;
    }
    let mut out = BTreeMap::new();
    for (_, (l, s)) in sizes {
        *out.entry((l, s)).or_insert(0) += 1;
    }
    out
}

fn sparse(m: &dosesim_radiomics::runs::SizeMatrix) -> BTreeMap<(u8, usize), usize> {
    m.entries().map(|(i, j, c)| ((i as u8, j as usize), c as usize)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glcm_matches_pair_enumeration(lv in level_grid()) {
        let vs = voxels(&lv);
        for (m, d) in glcm_matrices(&lv).iter().zip(DIRECTIONS_13) {
            prop_assert_eq!(m, &glcm_oracle(&vs, d, lv.bins));
        }
    }

    #[test]
    fn glrlm_matches_segment_enumeration(lv in level_grid()) {
        let vs = voxels(&lv);
        for (m, d) in glrlm_matrices(&lv).iter().zip(DIRECTIONS_13) {
            prop_assert_eq!(sparse(m), glrlm_oracle(&vs, d));
        }
    }

    #[test]
    fn glszm_matches_union_find(lv in level_grid()) {
        prop_assert_eq!(sparse(&glszm_matrix(&lv)), glszm_oracle(&voxels(&lv)));
    }

    #[test]
    fn gldm_matches_neighbour_count(lv in level_grid()) {
        let vs = voxels(&lv);
        let mut want = BTreeMap::new();
        for a in &vs {
            let dep = 1 + vs.iter().filter(|b| b.3 == a.3 && chebyshev_one(a, b)).count();
            *want.entry((a.3, dep)).or_insert(0) += 1;
        }
        prop_assert_eq!(sparse(&gldm_matrix(&lv)), want);
    }

    #[test]
    fn ngtdm_matches_neighbour_means(lv in level_grid()) {
        let vs = voxels(&lv);
        let mut n = vec![0.0; lv.bins];
        let mut s = vec![0.0; lv.bins];
        for a in &vs {
            let nb: Vec<f64> = vs.iter().filter(|b| chebyshev_one(a, b)).map(|b| b.3 as f64).collect();
            if nb.is_empty() {
                continue;
            }
            let mean = nb.iter().sum::<f64>() / nb.len() as f64;
            n[a.3 as usize - 1] += 1.0;
            s[a.3 as usize - 1] += (a.3 as f64 - mean).abs();
        }
        let m = ngtdm_matrix(&lv);
        prop_assert_eq!(m.n, n);
        for (got, want) in m.s.iter().zip(&s) {
            prop_assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn hand_grid_two_levels() {
    // 4×4×1 grid: top half level 1, bottom half level 2.
    let v: Vec<u8> = (0..16).map(|i| if i < 8 { 1 } else { 2 }).collect();
    let lv = LevelGrid::new(Grid3::from_vec([4, 4, 1], v), 2).unwrap();
    let m = &glcm_matrices(&lv)[1]; // (0, 1, 0)
    // Vertical pairs: 4 per row gap, 3 gaps; symmetric counting.
    assert_eq!(m, &vec![8.0, 4.0, 4.0, 8.0]);
}
