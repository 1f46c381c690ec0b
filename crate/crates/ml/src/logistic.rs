//! Logistic regression: L2 via Newton iterations, L1 via proximal Newton
//! with an inner coordinate-descent weighted lasso.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter()
            .map(|r| self.predict_proba_row(&r.iter().copied().collect::<Vec<_>>()))
            .collect()
    }
}

fn check(x: &DMatrix<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(MlError::Shape("rows and labels differ".into()));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(MlError::SingleClass("logistic regression".into()));
    }
    Ok(())
}

/// Minimizes `Σ logloss + (1/2C)·||β||²` (intercept unpenalized) by Newton
/// steps with step halving. `c = inf` gives the unregularized fit.
pub fn fit_l2(x: &DMatrix<f64>, y: &[u8], c: f64, max_iter: usize, tol: f64) -> Result<LogisticModel> {
    check(x, y)?;
    let (n, p) = x.shape();
    let penalty = if c.is_finite() { 1.0 / c } else { 0.0 };
    // Design with a leading column of ones.
    let xa = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let yv = DVector::from_iterator(n, y.iter().map(|&v| v as f64));
    let mut beta = DVector::<f64>::zeros(p + 1);
    let objective = |b: &DVector<f64>| -> f64 {
        let z = &xa * b;
        let loss: f64 = z
            .iter()
            .zip(yv.iter())
            .map(|(&zi, &yi)| {
                // log(1 + e^z) - y z, stable
                let l = if zi > 0.0 { zi + (-zi).exp().ln_1p() } else { zi.exp().ln_1p() };
                l - yi * zi
            })
            .sum();
        loss + 0.5 * penalty * b.rows(1, p).norm_squared()
    };
    let mut f = objective(&beta);
    for _ in 0..max_iter {
        let z = &xa * &beta;
        let prob = z.map(sigmoid);
        let w = prob.map(|q| (q * (1.0 - q)).max(1e-12));
        let mut grad = xa.transpose() * (&prob - &yv);
        let mut hess = xa.transpose() * DMatrix::from_diagonal(&w) * &xa;
        for j in 1..=p {
            grad[j] += penalty * beta[j];
            hess[(j, j)] += penalty;
        }
        // Tiny ridge keeps separable or collinear problems solvable.
        for j in 0..=p {
            hess[(j, j)] += 1e-10;
        }
        let step = hess
            .cholesky()
            .map(|ch| ch.solve(&grad))
            .ok_or_else(|| MlError::Numerical("singular Hessian".into()))?;
        let mut t = 1.0;
        let mut next = &beta - &step * t;
        let mut fn_ = objective(&next);
        while fn_ > f && t > 1e-10 {
            t *= 0.5;
            next = &beta - &step * t;
            fn_ = objective(&next);
        }
        let delta = (&next - &beta).amax();
        beta = next;
        let improvement = f - fn_;
        f = fn_;
        if delta < tol || improvement.abs() < tol * (1.0 + f.abs()) * 1e-3 {
            return Ok(LogisticModel { intercept: beta[0], coef: beta.rows(1, p).iter().copied().collect() });
        }
    }
    if c.is_finite() {
        return Err(MlError::NoConvergence(format!("L2 logistic regression after {max_iter} Newton steps")));
    }
    // Unregularized separable data diverges; return the last iterate.
    Ok(LogisticModel { intercept: beta[0], coef: beta.rows(1, p).iter().copied().collect() })
}

pub fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Coordinate descent for `(1/2n) Σ w_i (z_i - b0 - x_i β)² + λ ||β||₁`,
/// warm-started from `beta`/`intercept`. Returns the number of sweeps.
#[allow(clippy::too_many_arguments)]
pub fn weighted_lasso_cd(
    x: &DMatrix<f64>,
    z: &[f64],
    w: &[f64],
    lambda: f64,
    beta: &mut [f64],
    intercept: &mut f64,
    fit_intercept: bool,
    max_sweeps: usize,
    tol: f64,
) -> Result<usize> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut r: Vec<f64> = (0..n)
        .map(|i| z[i] - *intercept - (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>())
        .collect();
    let denom: Vec<f64> = (0..p).map(|j| (0..n).map(|i| w[i] * x[(i, j)].powi(2)).sum::<f64>() / nf).collect();
    let wsum: f64 = w.iter().sum();
    for sweep in 1..=max_sweeps {
        let mut max_change: f64 = 0.0;
        if fit_intercept && wsum > 0.0 {
            let shift = (0..n).map(|i| w[i] * r[i]).sum::<f64>() / wsum;
            *intercept += shift;
            r.iter_mut().for_each(|ri| *ri -= shift);
            max_change = max_change.max(shift.abs());
        }
        for j in 0..p {
            if denom[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = (0..n).map(|i| w[i] * x[(i, j)] * r[i]).sum::<f64>() / nf + denom[j] * old;
            let new = soft_threshold(rho, lambda) / denom[j];
            if new != old {
                let d = new - old;
                for i in 0..n {
                    r[i] -= x[(i, j)] * d;
                }
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if max_change < tol {
            return Ok(sweep);
        }
    }
    Err(MlError::NoConvergence(format!("coordinate descent: {max_sweeps} sweeps at λ = {lambda}")))
}

/// Smallest λ for which every coefficient is zero (standardized design).
pub fn lambda_max(x: &DMatrix<f64>, y: &[u8]) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    (0..x.ncols())
        .map(|j| (0..x.nrows()).map(|i| x[(i, j)] * (y[i] as f64 - ybar)).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

/// Minimizes `(1/n) Σ logloss + λ ||β||₁` by proximal Newton: each outer
/// step solves the weighted least-squares lasso of the local quadratic
/// model by coordinate descent.
pub fn fit_l1(x: &DMatrix<f64>, y: &[u8], lambda: f64, max_outer: usize, tol: f64) -> Result<LogisticModel> {
    check(x, y)?;
    let (n, p) = x.shape();
    let mut beta = vec![0.0; p];
    let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let mut b0 = (ybar / (1.0 - ybar)).ln();
    for _ in 0..max_outer {
        let old: Vec<f64> = std::iter::once(b0).chain(beta.iter().copied()).collect();
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let eta = b0 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
            let q = sigmoid(eta).clamp(1e-5, 1.0 - 1e-5);
            w[i] = q * (1.0 - q);
            z[i] = eta + (y[i] as f64 - q) / w[i];
        }
        weighted_lasso_cd(x, &z, &w, lambda, &mut beta, &mut b0, true, 10_000, tol * 0.1)?;
        let change = std::iter::once(b0)
            .chain(beta.iter().copied())
            .zip(&old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < tol {
            return Ok(LogisticModel { coef: beta, intercept: b0 });
        }
    }
    Err(MlError::NoConvergence(format!(
        "L1 logistic regression: {max_outer} outer steps at λ = {lambda}, p = {p}, n = {n}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_is_centered() {
        let xs = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, -1.5, 1.5];
        let ys = [0, 0, 1, 0, 1, 1, 0, 1];
        let x = DMatrix::from_column_slice(8, 1, &xs);
        let m = fit_l2(&x, &ys, 1.0, 100, 1e-12).unwrap();
        // Mirrored points carry mirrored labels, so the intercept vanishes.
        assert!((m.predict_proba_row(&[0.0]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn huge_lambda_zeroes_everything() {
        let x = DMatrix::from_fn(20, 3, |i, j| ((i * (j + 2)) % 7) as f64 - 3.0);
        let y: Vec<u8> = (0..20).map(|i| (i % 3 == 0) as u8).collect();
        let m = fit_l1(&x, &y, lambda_max(&x, &y) * 1.01, 100, 1e-8).unwrap();
        assert!(m.coef.iter().all(|&b| b == 0.0));
    }
}
