//! Distributional distances between embedded patch sets: Fréchet distance
//! of Gaussian fits (FID) and unbiased polynomial-kernel MMD² (KID).

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal load added to covariances before square roots.
pub const COVARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStats {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub n: usize,
}

impl EmbeddingStats {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    fn is_finite(&self) -> bool {
        self.mu.iter().chain(self.sigma.iter()).all(|v| v.is_finite())
    }
}

/// Sample mean and unbiased covariance of the rows of `emb`.
pub fn gaussian_stats(emb: &DMatrix<f64>) -> Result<EmbeddingStats> {
    let n = emb.nrows();
    if n < 2 {
        return Err(Error::Param(format!("need at least 2 embeddings, got {n}")));
    }
    let mu = emb.row_mean().transpose();
    let mut centered = emb.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu.transpose();
    }
    let mut sigma = centered.transpose() * &centered / (n as f64 - 1.0);
    symmetrize(&mut sigma);
    Ok(EmbeddingStats { mu, sigma, n })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Principal square root of a symmetric PSD matrix; negative eigenvalues
/// from rounding are clamped to zero.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `||μ1-μ2||² + tr(Σ1 + Σ2 - 2 (Σ1 Σ2)^½)`, clamped at zero.
/// The trace of the product root is taken as the trace of
/// `(Σ1^½ Σ2 Σ1^½)^½`, which is symmetric PSD and shares its eigenvalues.
pub fn fid(s1: &EmbeddingStats, s2: &EmbeddingStats) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::Shape(format!(
            "embedding dims differ: {} vs {}",
            s1.dim(),
            s2.dim()
        )));
    }
    if !s1.is_finite() || !s2.is_finite() {
        return Err(Error::Numerical("non-finite embedding statistics".into()));
    }
    let d = s1.dim();
    let reg = DMatrix::<f64>::identity(d, d) * COVARIANCE_FLOOR;
    let a = &s1.sigma + &reg;
    let b = &s2.sigma + &reg;
    let ra = sqrtm_psd(&a);
    let mut inner = &ra * &b * &ra;
    symmetrize(&mut inner);
    let tr_covmean: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let diff = &s1.mu - &s2.mu;
    let value = diff.dot(&diff) + a.trace() + b.trace() - 2.0 * tr_covmean;
    if !value.is_finite() {
        return Err(Error::Numerical("FID evaluated to a non-finite value".into()));
    }
    if value < -1e-6 {
        warn!("FID {value} below tolerance; clamped to 0");
    }
    Ok(value.max(0.0))
}

/// Polynomial kernel `(xᵀy / d + 1)³` between all rows of `x` and `y`.
pub fn polynomial_kernel(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let d = x.ncols() as f64;
    (x * y.transpose()).map(|v| (v / d + 1.0).powi(3))
}

/// Unbiased MMD² estimate between two equal-size samples.
pub fn mmd2_unbiased(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let m = x.nrows();
    if m < 2 || y.nrows() != m {
        return Err(Error::Param("MMD needs two samples of equal size >= 2".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::Shape("embedding dims differ".into()));
    }
    let kxx = polynomial_kernel(x, x);
    let kyy = polynomial_kernel(y, y);
    let kxy = polynomial_kernel(x, y);
    let off = |k: &DMatrix<f64>| k.sum() - k.trace();
    let mf = m as f64;
    Ok((off(&kxx) + off(&kyy)) / (mf * (mf - 1.0)) - 2.0 * kxy.sum() / (mf * mf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KidResult {
    pub mean: f64,
    pub std: f64,
    pub subset_size: usize,
    pub values: Vec<f64>,
}

/// KID: unbiased MMD² averaged over `n_subsets` random subsets of
/// `subset_size` rows drawn without replacement from each set; `std` is the
/// population standard deviation across subsets.
pub fn kid(
    e1: &DMatrix<f64>,
    e2: &DMatrix<f64>,
    subset_size: usize,
    n_subsets: usize,
    rng: &mut impl Rng,
) -> Result<KidResult> {
    let (n1, n2) = (e1.nrows(), e2.nrows());
    if n1 < 2 || n2 < 2 {
        return Err(Error::Param("KID needs at least 2 embeddings per set".into()));
    }
    if n_subsets == 0 {
        return Err(Error::Param("KID needs at least one subset".into()));
    }
    let m = subset_size.min(n1).min(n2);
    if m < subset_size {
        warn!("KID subset size {subset_size} reduced to {m}");
    }
    let m = m.max(2);
    let mut values = Vec::with_capacity(n_subsets);
    for _ in 0..n_subsets {
        let ix = sample(rng, n1, m).into_vec();
        let iy = sample(rng, n2, m).into_vec();
        let x = e1.select_rows(ix.iter());
        let y = e2.select_rows(iy.iter());
        values.push(mmd2_unbiased(&x, &y)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    Ok(KidResult {
        mean,
        std,
        subset_size: m,
        values,
    })
}
