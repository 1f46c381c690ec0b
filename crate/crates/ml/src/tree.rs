//! CART classification trees (Gini impurity, weighted samples) with
//! optional per-node feature subsampling.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 8, min_samples_split: 2, min_samples_leaf: 1, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { p1: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    /// Weighted Gini decrease per feature (unnormalized).
    pub importance: Vec<f64>,
}

fn gini(w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    if t <= 0.0 {
        return 0.0;
    }
    let (a, b) = (w0 / t, w1 / t);
    1.0 - a * a - b * b
}

struct Builder<'a, R: Rng> {
    rows: &'a [Vec<f64>],
    y: &'a [u8],
    w: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    total_weight: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn class_weights(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(a, b), &i| {
            if self.y[i] == 1 { (a, b + self.w[i]) } else { (a + self.w[i], b) }
        })
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (w0, w1) = self.class_weights(&idx);
        let id = self.nodes.len();
        let p1 = if w0 + w1 > 0.0 { w1 / (w0 + w1) } else { 0.5 };
        self.nodes.push(Node::Leaf { p1 });
        if depth >= self.params.max_depth || idx.len() < self.params.min_samples_split || w0 == 0.0 || w1 == 0.0 {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(&idx, w0, w1) else {
            return id;
        };
        self.importance[feature] += gain;
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Best (feature, threshold, weighted impurity decrease) or `None`
    /// when no split improves the node.
    fn best_split(&mut self, idx: &[usize], w0: f64, w1: f64) -> Option<(usize, f64, f64)> {
        let p = self.rows[0].len();
        let features: Vec<usize> = match self.params.max_features {
            Some(m) if m < p => {
                let mut f = sample(self.rng, p, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        };
        let parent = gini(w0, w1);
        let node_w = w0 + w1;
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in features {
            sorted.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            let (mut l0, mut l1) = (0.0, 0.0);
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                if self.y[i] == 1 { l1 += self.w[i] } else { l0 += self.w[i] }
                let (a, b) = (self.rows[i][f], self.rows[sorted[k + 1]][f]);
                if a == b || k + 1 < min_leaf || sorted.len() - k - 1 < min_leaf {
                    continue;
                }
                let (r0, r1) = (w0 - l0, w1 - l1);
                let lw = l0 + l1;
                let child = (lw * gini(l0, l1) + (node_w - lw) * gini(r0, r1)) / node_w;
                let gain = (parent - child) * node_w / self.total_weight;
                if gain > 1e-15 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, a + (b - a) / 2.0, gain));
                }
            }
        }
        best
    }
}

impl DecisionTree {
    /// `rows[i]` is sample `i`; `weights` default to 1.
    pub fn fit(rows: &[Vec<f64>], y: &[u8], weights: Option<&[f64]>, params: TreeParams, rng: &mut impl Rng) -> Self {
        let ones = vec![1.0; y.len()];
        let w = weights.unwrap_or(&ones);
        let p = rows.first().map_or(0, Vec::len);
        let mut b = Builder {
            rows,
            y,
            w,
            params,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; p],
            total_weight: w.iter().sum(),
        };
        b.build((0..y.len()).collect(), 0);
        DecisionTree { nodes: b.nodes, n_features: p, importance: b.importance }
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { p1 } => return *p1,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn xor_needs_depth_two() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let t = DecisionTree::fit(&rows, &y, None, TreeParams::default(), &mut rng);
        // Gini cannot improve at the root of XOR, so the tree stays a leaf.
        assert_eq!(t.predict_proba_row(&[0.0, 1.0]), 0.5);

        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let t = DecisionTree::fit(&rows, &[0, 0, 1, 1], None, TreeParams::default(), &mut rng);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict_proba_row(&[1.4]), 0.0);
        assert_eq!(t.predict_proba_row(&[1.6]), 1.0);
        assert!((t.importance[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_move_leaf_probability() {
        let rows = vec![vec![0.0]; 3];
        let t = DecisionTree::fit(&rows, &[0, 1, 1], Some(&[2.0, 1.0, 1.0]), TreeParams::default(), &mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(t.predict_proba_row(&[0.0]), 0.5);
    }
}
