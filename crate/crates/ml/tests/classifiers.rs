mod common;

use common::synthetic;
use dosesim_core::rng::RngStream;
use dosesim_ml::filters::mann_whitney;
use dosesim_ml::{binary_metrics, fit_classifier, roc_auc, ClassifierKind, Hyperparams};
use proptest::prelude::*;

#[test]
fn tree_and_knn_fit_training_data() {
    let fm = synthetic(60, 3, 1, 1.0, 2);
    let hp = Hyperparams { tree_max_depth: 64, knn_k: 5, ..Hyperparams::default() };
    for kind in [ClassifierKind::DecisionTree, ClassifierKind::Knn] {
        let m = fit_classifier(&fm.x, &fm.labels, kind, &hp, RngStream::new(1)).unwrap();
        let p = m.predict_proba(&fm.x);
        let acc = p.iter().zip(&fm.labels).filter(|(s, &l)| (**s >= 0.5) == (l == 1)).count();
        assert_eq!(acc, 60, "{kind:?}");
    }
}

#[test]
fn every_classifier_learns_a_shift() {
    let train = synthetic(120, 4, 2, 2.0, 5);
    let test = synthetic(120, 4, 2, 2.0, 6);
    let hp = Hyperparams { forest_trees: 50, adaboost_estimators: 30, ..Hyperparams::default() };
    for kind in ClassifierKind::ALL {
        let m = fit_classifier(&train.x, &train.labels, kind, &hp, RngStream::new(9)).unwrap();
        let p = m.predict_proba(&test.x);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let auc = roc_auc(&p, &test.labels).unwrap();
        assert!(auc > 0.85, "{kind:?}: {auc}");
        let again = fit_classifier(&train.x, &train.labels, kind, &hp, RngStream::new(9)).unwrap();
        assert_eq!(again.predict_proba(&test.x), p, "{kind:?} not reproducible");
    }
}

#[test]
fn classifier_json_round_trip() {
    let fm = synthetic(40, 3, 1, 1.0, 8);
    let hp = Hyperparams { forest_trees: 10, ..Hyperparams::default() };
    for kind in ClassifierKind::ALL {
        let m = fit_classifier(&fm.x, &fm.labels, kind, &hp, RngStream::new(2)).unwrap();
        let back: dosesim_ml::Classifier = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.predict_proba(&fm.x), m.predict_proba(&fm.x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auc_equals_normalized_mann_whitney(
        neg in prop::collection::vec(0u8..6, 1..15),
        pos in prop::collection::vec(0u8..6, 1..15),
    ) {
        let scores: Vec<f64> = neg.iter().chain(&pos).map(|&v| v as f64).collect();
        let labels: Vec<u8> = std::iter::repeat_n(0, neg.len()).chain(std::iter::repeat_n(1, pos.len())).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        // U counts (neg, pos) pairs with pos above neg, ties counted half.
        let mut u = 0.0;
        for &a in &neg {
            for &b in &pos {
                u += if b > a { 1.0 } else if b == a { 0.5 } else { 0.0 };
            }
        }
        let expect = u / (neg.len() * pos.len()) as f64;
        prop_assert!((auc - expect).abs() < 1e-12);
        let negf: Vec<f64> = neg.iter().map(|&v| v as f64).collect();
        let posf: Vec<f64> = pos.iter().map(|&v| v as f64).collect();
        let mw = mann_whitney(&negf, &posf).unwrap();
        let n1n2 = (neg.len() * pos.len()) as f64;
        prop_assert!((mw.u - u).abs() < 1e-9 || (mw.u - (n1n2 - u)).abs() < 1e-9);
    }

    #[test]
    fn balanced_accuracy_is_mean_of_rates(
        scores in prop::collection::vec(0.0f64..1.0, 4..40),
        t in 0.0f64..1.0,
    ) {
        let labels: Vec<u8> = (0..scores.len()).map(|i| (i % 2) as u8).collect();
        let m = binary_metrics(&scores, &labels, t).unwrap();
        let tp = scores.iter().zip(&labels).filter(|(s, &l)| l == 1 && **s >= t).count() as f64;
        let tn = scores.iter().zip(&labels).filter(|(s, &l)| l == 0 && **s < t).count() as f64;
        let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
        let neg = labels.len() as f64 - pos;
        prop_assert!((m.sensitivity - tp / pos).abs() < 1e-12);
        prop_assert!((m.specificity - tn / neg).abs() < 1e-12);
        prop_assert!((m.balanced_accuracy - (m.sensitivity + m.specificity) / 2.0).abs() < 1e-12);
    }
}
