//! Random forests (bootstrap + feature subsampling) and SAMME AdaBoost
//! over decision stumps.

use dosesim_core::rng::RngStream;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap sample and split features from the
    /// substream `("tree", t)`, so the result is independent of thread count.
    pub fn fit(rows: &[Vec<f64>], y: &[u8], n_trees: usize, params: TreeParams, stream: RngStream) -> Self {
        let n = y.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream.substream("tree", t as u64).rng();
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let r: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
                let yy: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
                DecisionTree::fit(&r, &yy, None, params, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean of per-tree normalized impurity decreases, renormalized to sum
    /// to 1 (all zeros if no tree ever split).
    pub fn importances(&self) -> Vec<f64> {
        let p = self.trees.first().map_or(0, |t| t.n_features);
        let mut acc = vec![0.0; p];
        for t in &self.trees {
            let s: f64 = t.importance.iter().sum();
            if s > 0.0 {
                for (a, v) in acc.iter_mut().zip(&t.importance) {
                    *a += v / s;
                }
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
}

impl AdaBoost {
    /// Binary SAMME: stump weight `lr · ln((1 - err) / err)`; boosting stops
    /// early on a perfect stump or one no better than chance.
    pub fn fit(rows: &[Vec<f64>], y: &[u8], n_estimators: usize, learning_rate: f64, rng: &mut impl Rng) -> Self {
        let n = y.len();
        let mut w = vec![1.0 / n as f64; n];
        let stump = TreeParams { max_depth: 1, ..TreeParams::default() };
        let mut model = AdaBoost { stumps: Vec::new(), alphas: Vec::new() };
        for _ in 0..n_estimators {
            let t = DecisionTree::fit(rows, y, Some(&w), stump, rng);
            let pred: Vec<u8> = rows.iter().map(|r| (t.predict_proba_row(r) >= 0.5) as u8).collect();
            let err: f64 = (0..n).filter(|&i| pred[i] != y[i]).map(|i| w[i]).sum::<f64>() / w.iter().sum::<f64>();
            if err >= 0.5 {
                if model.stumps.is_empty() {
                    model.stumps.push(t);
                    model.alphas.push(1.0);
                }
                break;
            }
            let e = err.max(1e-10);
            let alpha = learning_rate * ((1.0 - e) / e).ln();
            model.stumps.push(t);
            model.alphas.push(alpha);
            if err == 0.0 {
                break;
            }
            for i in 0..n {
                if pred[i] != y[i] {
                    w[i] *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        model
    }

    /// Weighted vote mapped from [-1, 1] onto [0, 1].
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        let vote: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .map(|(t, a)| if t.predict_proba_row(row) >= 0.5 { *a } else { -*a })
            .sum();
        ((vote / total + 1.0) / 2.0).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y = (0..40).map(|i| (i >= 20) as u8).collect();
        (rows, y)
    }

    #[test]
    fn forest_is_seeded_and_ranks_signal() {
        let (rows, y) = data();
        let a = RandomForest::fit(&rows, &y, 30, TreeParams { max_features: Some(1), ..TreeParams::default() }, RngStream::new(3));
        let b = RandomForest::fit(&rows, &y, 30, TreeParams { max_features: Some(1), ..TreeParams::default() }, RngStream::new(3));
        assert_eq!(a, b);
        let imp = a.importances();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp[0] > imp[1]);
    }

    #[test]
    fn adaboost_separable() {
        let (rows, y) = data();
        let mut rng = RngStream::new(0).rng();
        let m = AdaBoost::fit(&rows, &y, 50, 1.0, &mut rng);
        assert_eq!(m.stumps.len(), 1);
        assert!(rows.iter().zip(&y).all(|(r, &l)| (m.predict_proba_row(r) >= 0.5) == (l == 1)));
    }
}
