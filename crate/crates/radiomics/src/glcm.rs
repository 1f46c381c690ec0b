//! Gray-level co-occurrence matrices and their 24 features.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::grid::DIRECTIONS_13;
use crate::roi::LevelGrid;

pub const GLCM_FEATURES: [&str; 24] = [
    "Autocorrelation",
    "JointAverage",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "JointEnergy",
    "JointEntropy",
    "Imc1",
    "Imc2",
    "Idm",
    "MCC",
    "Idmn",
    "Id",
    "Idn",
    "InverseVariance",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
];

/// Symmetric co-occurrence counts (row-major `bins × bins`, level `l` at
/// index `l - 1`) for each of the 13 directions at distance 1.
pub fn glcm_matrices(lv: &LevelGrid) -> Vec<Vec<f64>> {
    let ng = lv.bins;
    let g = &lv.levels;
    DIRECTIONS_13
        .iter()
        .map(|&d| {
            let mut m = vec![0.0; ng * ng];
            for (idx, &i) in g.data().iter().enumerate() {
                if i == 0 {
                    continue;
                }
                if let Some(q) = g.offset(g.coords(idx), d) {
                    let j = g.data()[q];
                    if j > 0 {
                        let (a, b) = (i as usize - 1, j as usize - 1);
                        m[a * ng + b] += 1.0;
                        m[b * ng + a] += 1.0;
                    }
                }
            }
            m
        })
        .collect()
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// Features of one co-occurrence matrix (counts, any positive total).
pub fn glcm_features_of(counts: &[f64], ng: usize) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let p: Vec<f64> = counts.iter().map(|c| c / total).collect();
    let at = |i: usize, j: usize| p[i * ng + j];
    let lvl = |i: usize| (i + 1) as f64;
    let px: Vec<f64> = (0..ng).map(|i| (0..ng).map(|j| at(i, j)).sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| at(i, j)).sum()).collect();
    let mux: f64 = (0..ng).map(|i| lvl(i) * px[i]).sum();
    let muy: f64 = (0..ng).map(|j| lvl(j) * py[j]).sum();
    let varx: f64 = (0..ng).map(|i| (lvl(i) - mux).powi(2) * px[i]).sum();
    let vary: f64 = (0..ng).map(|j| (lvl(j) - muy).powi(2) * py[j]).sum();
    let mut psum = vec![0.0; 2 * ng + 1];
    let mut pdiff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            psum[i + j + 2] += at(i, j);
            pdiff[i.abs_diff(j)] += at(i, j);
        }
    }
    let ngf = ng as f64;
    let (mut auto, mut prom, mut shade, mut tend, mut contrast) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut energy, mut idm, mut idmn, mut id, mut idn, mut iv, mut maxp) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0f64);
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            let pxy = px[i] * py[j];
            if pxy > 0.0 {
                hxy2 -= pxy * pxy.log2();
                if v > 0.0 {
                    hxy1 -= v * pxy.log2();
                }
            }
            if v == 0.0 {
                continue;
            }
            let (a, b) = (lvl(i), lvl(j));
            let s = a + b - mux - muy;
            let k = (a - b).abs();
            auto += a * b * v;
            prom += s.powi(4) * v;
            shade += s.powi(3) * v;
            tend += s * s * v;
            contrast += k * k * v;
            energy += v * v;
            idm += v / (1.0 + k * k);
            idmn += v / (1.0 + k * k / (ngf * ngf));
            id += v / (1.0 + k);
            idn += v / (1.0 + k / ngf);
            if i != j {
                iv += v / (k * k);
            }
            maxp = maxp.max(v);
        }
    }
    let correlation = if varx > 0.0 && vary > 0.0 {
        (auto - mux * muy) / (varx.sqrt() * vary.sqrt())
    } else {
        1.0
    };
    let diff_avg: f64 = pdiff.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let diff_var: f64 = pdiff.iter().enumerate().map(|(k, v)| (k as f64 - diff_avg).powi(2) * v).sum();
    let hxy = entropy(p.iter().copied());
    let hx = entropy(px.iter().copied());
    let hy = entropy(py.iter().copied());
    let imc1 = if hx.max(hy) > 0.0 { (hxy - hxy1) / hx.max(hy) } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();
    let sum_avg: f64 = psum.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    vec![
        auto,
        mux,
        prom,
        shade,
        tend,
        contrast,
        correlation,
        diff_avg,
        entropy(pdiff.iter().copied()),
        diff_var,
        energy,
        hxy,
        imc1,
        imc2,
        idm,
        mcc(&p, &px, &py, ng),
        idmn,
        id,
        idn,
        iv,
        maxp,
        sum_avg,
        entropy(psum.iter().copied()),
        varx,
    ]
}

/// Maximal correlation coefficient: square root of the second-largest
/// eigenvalue of `Q(i,j) = Σ_k p(i,k) p(j,k) / (px(i) py(k))`. For a
/// symmetric matrix Q is similar to `S²` with `S = D^-½ P D^-½`, so the
/// eigenvalues come from a symmetric decomposition. One occupied level → 1.
fn mcc(p: &[f64], px: &[f64], py: &[f64], ng: usize) -> f64 {
    let occ: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0 && py[i] > 0.0).collect();
    if occ.len() < 2 {
        return 1.0;
    }
    let n = occ.len();
    let s = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (occ[a], occ[b]);
        0.5 * (p[i * ng + j] + p[j * ng + i]) / (px[i] * py[j]).sqrt()
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().map(|l| l * l).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1].max(0.0).sqrt().min(1.0)
}

/// Direction-averaged GLCM features; directions without pairs are skipped.
/// A ROI without any pair (single voxel) is scored as a one-level matrix.
pub fn glcm_features(lv: &LevelGrid) -> Vec<f64> {
    let ng = lv.bins;
    let mats: Vec<Vec<f64>> = glcm_matrices(lv)
        .into_iter()
        .filter(|m| m.iter().any(|&c| c > 0.0))
        .collect();
    if mats.is_empty() {
        let l = lv.levels.data().iter().copied().find(|&l| l > 0).unwrap_or(1) as usize - 1;
        let mut m = vec![0.0; ng * ng];
        m[l * ng + l] = 1.0;
        return glcm_features_of(&m, ng);
    }
    average(mats.iter().map(|m| glcm_features_of(m, ng)))
}

pub(crate) fn average(rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for r in rows {
        if acc.is_empty() {
            acc = vec![0.0; r.len()];
        }
        for (a, v) in acc.iter_mut().zip(&r) {
            *a += v;
        }
        n += 1;
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    acc
}
