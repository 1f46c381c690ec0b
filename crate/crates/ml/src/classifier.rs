//! Uniform fit/predict interface over the five classifier families.

use dosesim_core::rng::RngStream;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{AdaBoost, RandomForest};
use crate::error::{MlError, Result};
use crate::knn::Knn;
use crate::logistic::{fit_l2, LogisticModel};
use crate::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    AdaBoost,
    DecisionTree,
    Knn,
    LogisticRegression,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::AdaBoost,
        ClassifierKind::DecisionTree,
        ClassifierKind::Knn,
        ClassifierKind::LogisticRegression,
        ClassifierKind::RandomForest,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ClassifierKind::AdaBoost => "adaboost",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::Knn => "knn",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub forest_trees: usize,
    pub adaboost_estimators: usize,
    pub adaboost_learning_rate: f64,
    /// Inverse L2 strength for logistic regression.
    pub logistic_c: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            knn_k: 5,
            tree_max_depth: 8,
            forest_trees: 200,
            adaboost_estimators: 100,
            adaboost_learning_rate: 1.0,
            logistic_c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    AdaBoost(AdaBoost),
    DecisionTree(DecisionTree),
    Knn(Knn),
    LogisticRegression(LogisticModel),
    RandomForest(RandomForest),
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn fit_classifier(x: &DMatrix<f64>, y: &[u8], kind: ClassifierKind, hp: &Hyperparams, stream: RngStream) -> Result<Classifier> {
    if x.nrows() != y.len() {
        return Err(MlError::Shape("rows and labels differ".into()));
    }
    if y.is_empty() || y.iter().all(|&v| v == y[0]) {
        return Err(MlError::SingleClass(format!("training {}", kind.slug())));
    }
    let r = rows(x);
    let mut rng = stream.rng();
    Ok(match kind {
        ClassifierKind::AdaBoost => {
            Classifier::AdaBoost(AdaBoost::fit(&r, y, hp.adaboost_estimators, hp.adaboost_learning_rate, &mut rng))
        }
        ClassifierKind::DecisionTree => {
            let p = TreeParams { max_depth: hp.tree_max_depth, ..TreeParams::default() };
            Classifier::DecisionTree(DecisionTree::fit(&r, y, None, p, &mut rng))
        }
        ClassifierKind::Knn => Classifier::Knn(Knn::fit(x, y, hp.knn_k)),
        ClassifierKind::LogisticRegression => Classifier::LogisticRegression(fit_l2(x, y, hp.logistic_c, 200, 1e-9)?),
        ClassifierKind::RandomForest => {
            let m = ((x.ncols() as f64).sqrt().round() as usize).max(1);
            let p = TreeParams { max_depth: usize::MAX, max_features: Some(m), ..TreeParams::default() };
            Classifier::RandomForest(RandomForest::fit(&r, y, hp.forest_trees, p, stream))
        }
    })
}

impl Classifier {
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        match self {
            Classifier::AdaBoost(m) => m.predict_proba_row(row),
            Classifier::DecisionTree(m) => m.predict_proba_row(row),
            Classifier::Knn(m) => m.predict_proba_row(row),
            Classifier::LogisticRegression(m) => m.predict_proba_row(row),
            Classifier::RandomForest(m) => m.predict_proba_row(row),
        }
    }

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Vec<f64> {
        rows(x).iter().map(|r| self.predict_proba_row(r)).collect()
    }
}
