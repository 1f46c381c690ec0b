//! Feature selectors: LASSO (CV over λ), mRMR, PCA, RFE and random-forest
//! importance.

use dosesim_core::rng::RngStream;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensemble::RandomForest;
use crate::error::{MlError, Result};
use crate::logistic::{fit_l1, fit_l2, lambda_max};
use crate::roc::roc_auc;
use crate::tree::TreeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Lasso,
    Mrmr,
    Pca,
    Rfe,
    RfImportance,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 5] =
        [SelectorKind::Lasso, SelectorKind::Mrmr, SelectorKind::Pca, SelectorKind::Rfe, SelectorKind::RfImportance];

    pub fn slug(self) -> &'static str {
        match self {
            SelectorKind::Lasso => "lasso",
            SelectorKind::Mrmr => "mrmr",
            SelectorKind::Pca => "pca",
            SelectorKind::Rfe => "rfe",
            SelectorKind::RfImportance => "rf_importance",
        }
    }

    /// LASSO picks its own subset size.
    pub fn uses_k(self) -> bool {
        self != SelectorKind::Lasso
    }
}

/// A selector fitted on training data, reusable on new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedSelector {
    Columns { indices: Vec<usize> },
    Pca(Pca),
}

impl FittedSelector {
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            FittedSelector::Columns { indices } => x.select_columns(indices.iter()),
            FittedSelector::Pca(p) => p.transform(x),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FittedSelector::Columns { indices } => indices.len(),
            FittedSelector::Pca(p) => p.components.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoSelection {
    pub indices: Vec<usize>,
    pub lambda: f64,
    pub cv_auc: f64,
}

/// Default λ path: 20 log-spaced values from λ_max down to λ_max/1000.
pub fn lambda_path(x: &DMatrix<f64>, y: &[u8]) -> Vec<f64> {
    let lm = lambda_max(x, y);
    (0..20).map(|i| lm * 10f64.powf(-3.0 * i as f64 / 19.0)).collect()
}

/// Stratified fold assignment, shuffled by `stream`.
pub fn stratified_folds(y: &[u8], folds: usize, stream: RngStream) -> Vec<usize> {
    let mut assign = vec![0; y.len()];
    let mut rng = stream.rng();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assign[i] = k % folds;
        }
    }
    assign
}

/// L1 logistic regression with λ chosen by `folds`-fold CV AUC (ties to
/// the larger λ); returns the features with nonzero coefficients in the
/// full-data fit.
pub fn lasso_select(x: &DMatrix<f64>, y: &[u8], lambdas: &[f64], folds: usize, stream: RngStream) -> Result<LassoSelection> {
    if lambdas.is_empty() || folds < 2 {
        return Err(MlError::Param("LASSO needs a λ grid and at least 2 folds".into()));
    }
    let assign = stratified_folds(y, folds, stream);
    let mut best = (f64::NEG_INFINITY, lambdas[0]);
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for &lambda in &sorted {
        let mut aucs = Vec::new();
        for f in 0..folds {
            let tr: Vec<usize> = (0..y.len()).filter(|&i| assign[i] != f).collect();
            let te: Vec<usize> = (0..y.len()).filter(|&i| assign[i] == f).collect();
            let ytr: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
            let yte: Vec<u8> = te.iter().map(|&i| y[i]).collect();
            if ytr.iter().all(|&v| v == ytr[0]) || yte.iter().all(|&v| v == yte[0]) {
                continue;
            }
            let m = fit_l1(&x.select_rows(tr.iter()), &ytr, lambda, 100, 1e-6)?;
            aucs.push(roc_auc(&m.predict_proba(&x.select_rows(te.iter())), &yte)?);
        }
        if aucs.is_empty() {
            return Err(MlError::Insufficient("no CV fold holds both classes".into()));
        }
        let auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
        if auc > best.0 + 1e-12 {
            best = (auc, lambda);
        }
    }
    let m = fit_l1(x, y, best.1, 100, 1e-6)?;
    Ok(LassoSelection {
        indices: m.coef.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect(),
        lambda: best.1,
        cv_auc: best.0,
    })
}

/// Quantile bin edges (upper bounds of the first `bins - 1` bins).
fn quantile_codes(col: &[f64], bins: usize) -> Vec<usize> {
    let mut s = col.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let edges: Vec<f64> = (1..bins).map(|b| s[(b * n / bins).min(n - 1)]).collect();
    col.iter().map(|v| edges.iter().filter(|&&e| *v >= e).count()).collect()
}

/// Mutual information (nats) between two discrete codings.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; na * nb];
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * nb + j] += 1.0;
        pa[i] += 1.0;
        pb[j] += 1.0;
    }
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i * nb + j];
            if c > 0.0 {
                mi += c / n * (c * n / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

pub const MRMR_BINS: usize = 4;

/// Greedy mRMR (difference form) on 4-bin quantile codes. Ties go to the
/// lower column index.
pub fn mrmr_select(x: &DMatrix<f64>, y: &[u8], k: usize) -> Result<Vec<usize>> {
    let p = x.ncols();
    if k == 0 || k > p {
        return Err(MlError::Param(format!("mRMR k = {k} with {p} features")));
    }
    let codes: Vec<Vec<usize>> = (0..p)
        .map(|j| quantile_codes(&x.column(j).iter().copied().collect::<Vec<_>>(), MRMR_BINS))
        .collect();
    let yc: Vec<usize> = y.iter().map(|&v| v as usize).collect();
    let relevance: Vec<f64> = codes.iter().map(|c| mutual_information(c, &yc)).collect();
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut redundancy = vec![0.0; p];
    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if selected.contains(&j) {
                continue;
            }
            let score = if selected.is_empty() {
                relevance[j]
            } else {
                relevance[j] - redundancy[j] / selected.len() as f64
            };
            if best.is_none_or(|(_, s)| score > s + 1e-12) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("k <= p leaves a candidate");
        selected.push(j);
        for (i, r) in redundancy.iter_mut().enumerate() {
            if !selected.contains(&i) {
                *r += mutual_information(&codes[i], &codes[j]);
            }
        }
    }
    Ok(selected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit loading vectors, largest variance first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &DMatrix<f64>, k: usize) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(MlError::Insufficient("PCA needs at least 2 rows".into()));
        }
        let mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
        let c = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - mean[j]);
        let cov = c.transpose() * &c / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > 1e-10 * top.max(1e-300)).count();
        if k == 0 || k > rank {
            return Err(MlError::Param(format!("PCA k = {k} exceeds rank {rank}")));
        }
        let mut components = Vec::with_capacity(k);
        for &i in &order[..k] {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Sign convention: largest-magnitude loading positive.
            let m = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            if m < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
        }
        Ok(Pca {
            mean,
            components,
            explained_variance: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
        })
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.components.len(), |i, c| {
            self.components[c].iter().enumerate().map(|(j, w)| w * (x[(i, j)] - self.mean[j])).sum()
        })
    }

    pub fn reconstruct(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(z.nrows(), self.mean.len(), |i, j| {
            self.mean[j] + self.components.iter().enumerate().map(|(c, w)| z[(i, c)] * w[j]).sum::<f64>()
        })
    }
}

/// Recursive elimination with L2 logistic regression, one feature per
/// round (lowest |coefficient|, ties to the higher index).
pub fn rfe_select(x: &DMatrix<f64>, y: &[u8], k: usize) -> Result<Vec<usize>> {
    let p = x.ncols();
    if k == 0 || k > p {
        return Err(MlError::Param(format!("RFE k = {k} with {p} features")));
    }
    let mut keep: Vec<usize> = (0..p).collect();
    while keep.len() > k {
        let m = fit_l2(&x.select_columns(keep.iter()), y, 1.0, 200, 1e-9)?;
        let worst = m
            .coef
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("non-empty");
        keep.remove(worst);
    }
    Ok(keep)
}

pub const IMPORTANCE_TREES: usize = 200;

/// Top-`k` features by random-forest impurity importance; also returns the
/// importances.
pub fn rf_importance_select(x: &DMatrix<f64>, y: &[u8], k: usize, stream: RngStream) -> Result<(Vec<usize>, Vec<f64>)> {
    let p = x.ncols();
    if k == 0 || k > p {
        return Err(MlError::Param(format!("RF importance k = {k} with {p} features")));
    }
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let m = ((p as f64).sqrt().round() as usize).max(1);
    let params = TreeParams { max_depth: usize::MAX, max_features: Some(m), ..TreeParams::default() };
    let imp = RandomForest::fit(&rows, y, IMPORTANCE_TREES, params, stream).importances();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok((order, imp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutual_information_bounds() {
        let a = [0, 1, 0, 1, 2, 2];
        assert!((mutual_information(&a, &a) - (3.0f64).ln()).abs() < 1e-12);
        assert!(mutual_information(&a, &[0; 6]).abs() < 1e-12);
    }

    #[test]
    fn quantile_codes_balanced() {
        let col: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let c = quantile_codes(&col, 4);
        for b in 0..4 {
            assert_eq!(c.iter().filter(|&&v| v == b).count(), 5);
        }
    }
}
