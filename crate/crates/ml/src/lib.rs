//! Feature filtering and selection, classifiers, the training and
//! validation protocol, bootstrap evaluation and method comparison.

pub mod balance;
pub mod bootstrap;
pub mod classifier;
pub mod compare;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod filters;
pub mod knn;
pub mod logistic;
pub mod pipeline;
pub mod rank;
pub mod roc;
pub mod scaler;
pub mod select;
pub mod stats;
pub mod tree;

pub use balance::balance_dataset;
pub use bootstrap::{bootstrap_metrics, BootstrapConfig, BootstrapResult, MetricDistribution};
pub use classifier::{fit_classifier, Classifier, ClassifierKind, Hyperparams};
pub use compare::{compare_methods, ComparisonReport};
pub use data::FeatureMatrix;
pub use error::{MlError, Result};
pub use pipeline::{model_selection, train_model, CandidateResult, SelectionReport, TrainConfig, TrainedModel};
pub use roc::{binary_metrics, optimal_threshold, roc_auc, roc_curve, BinaryMetrics, RocCurve};
pub use select::{FittedSelector, SelectorKind};
pub use stats::{bonferroni, bonferroni_adjust, friedman, wilcoxon_signed_rank, TestResult, WilcoxonResult};
