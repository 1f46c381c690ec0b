use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Euclidean k-nearest neighbours with inverse-distance weighted class
/// probability. Exact matches, when present, decide alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Knn {
    pub fn fit(x: &DMatrix<f64>, y: &[u8], k: usize) -> Self {
        Knn {
            k: k.max(1),
            rows: x.row_iter().map(|r| r.iter().copied().collect()).collect(),
            labels: y.to_vec(),
        }
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
            .collect();
        // Ties broken by training index for determinism.
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near = &d[..self.k.min(d.len())];
        let exact: Vec<&(f64, usize)> = near.iter().filter(|(dist, _)| *dist == 0.0).collect();
        if !exact.is_empty() {
            return exact.iter().map(|(_, i)| self.labels[*i] as f64).sum::<f64>() / exact.len() as f64;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (dist, i) in near {
            num += self.labels[*i] as f64 / dist;
            den += 1.0 / dist;
        }
        num / den
    }
}
