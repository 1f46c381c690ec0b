mod common;

use common::{jitter, normal, rng, synthetic};
use dosesim_core::rng::RngStream;
use dosesim_ml::filters::{discriminative_filter, feature_iccs, mann_whitney, redundancy_filter, stability_filter};
use dosesim_ml::logistic::{fit_l1, sigmoid, weighted_lasso_cd};
use dosesim_ml::select::{lasso_select, lambda_path, mrmr_select, rf_importance_select, rfe_select, Pca};
use dosesim_ml::FeatureMatrix;
use nalgebra::DMatrix;
use rand::Rng;

fn entropy(codes: &[usize]) -> f64 {
    let n = codes.len() as f64;
    let mut counts = std::collections::HashMap::new();
    for c in codes {
        *counts.entry(*c).or_insert(0.0) += 1.0;
    }
    counts.values().map(|c: &f64| -(c / n) * (c / n).ln()).sum()
}

fn mi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let joint: Vec<usize> = a.iter().zip(b).map(|(x, y)| x * 100 + y).collect();
    entropy(a) + entropy(b) - entropy(&joint)
}

#[test]
fn stability_keeps_low_noise_features() {
    let base = synthetic(40, 4, 0, 0.0, 1);
    let mut pert = Vec::new();
    for s in 0..3 {
        let mut p = base.clone();
        let mut r = rng(100 + s);
        for i in 0..40 {
            p.x[(i, 0)] += 0.01 * normal(&mut r);
            p.x[(i, 1)] += 0.2 * normal(&mut r);
            p.x[(i, 2)] += 3.0 * normal(&mut r);
            p.x[(i, 3)] = normal(&mut r);
        }
        pert.push(p);
    }
    let icc = feature_iccs(&base, &pert).unwrap();
    assert!(icc[0] > 0.99 && icc[1] > 0.9, "{icc:?}");
    assert!(icc[2] < 0.5 && icc[3] < 0.5, "{icc:?}");
    assert_eq!(stability_filter(&base, &pert, 0.75).unwrap(), vec!["f00", "f01"]);
}

#[test]
fn mann_whitney_null_rejection_rate() {
    let mut r = rng(7);
    let trials = 2000;
    let mut rejected = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..20).map(|_| normal(&mut r)).collect();
        let b: Vec<f64> = (0..20).map(|_| normal(&mut r)).collect();
        if mann_whitney(&a, &b).unwrap().p < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!((0.03..0.07).contains(&rate), "rate {rate}");
}

#[test]
fn mann_whitney_exact_small_samples() {
    // Complete separation with 4 vs 4: P = 2 / C(8,4).
    let r = mann_whitney(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
    assert!((r.p - 2.0 / 70.0).abs() < 1e-12);
}

#[test]
fn discriminative_and_redundancy_filters() {
    let mut fm = synthetic(80, 5, 2, 2.0, 3);
    // f02 becomes a monotone transform of f00; f03 a copy of f01.
    for i in 0..80 {
        fm.x[(i, 2)] = fm.x[(i, 0)].powi(3);
        fm.x[(i, 3)] = fm.x[(i, 1)];
    }
    let disc = discriminative_filter(&fm, 0.05).unwrap();
    let names: Vec<&str> = disc.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["f00", "f01", "f02", "f03"]);
    let kept = redundancy_filter(&fm, &disc, 0.9).unwrap();
    assert_eq!(kept.len(), 2);
    assert!(kept.contains(&"f00".to_string()) != kept.contains(&"f02".to_string()));
    assert!(kept.contains(&"f01".to_string()) != kept.contains(&"f03".to_string()));
}

/// Plain gradient descent on the mean log-loss.
fn logistic_gd(x: &DMatrix<f64>, y: &[u8]) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut w = vec![0.0; p + 1];
    for _ in 0..100_000 {
        let mut g = vec![0.0; p + 1];
        for i in 0..n {
            let eta = w[0] + (0..p).map(|j| x[(i, j)] * w[j + 1]).sum::<f64>();
            let e = sigmoid(eta) - y[i] as f64;
            g[0] += e / n as f64;
            for j in 0..p {
                g[j + 1] += e * x[(i, j)] / n as f64;
            }
        }
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj -= 1.0 * gj;
        }
    }
    w
}

#[test]
fn lasso_zero_penalty_matches_gradient_descent() {
    let fm = synthetic(60, 2, 1, 1.0, 5);
    let m = fit_l1(&fm.x, &fm.labels, 0.0, 200, 1e-12).unwrap();
    let w = logistic_gd(&fm.x, &fm.labels);
    assert!((m.intercept - w[0]).abs() < 1e-4, "{} vs {}", m.intercept, w[0]);
    for j in 0..2 {
        assert!((m.coef[j] - w[j + 1]).abs() < 1e-4, "{:?} vs {:?}", m.coef, w);
    }
}

#[test]
fn lasso_orthonormal_design_soft_thresholds() {
    let mut r = rng(9);
    let n = 30;
    let a = DMatrix::from_fn(n, 4, |_, _| normal(&mut r));
    let q = a.qr().q();
    let z: Vec<f64> = (0..n).map(|_| 3.0 * normal(&mut r)).collect();
    let w = vec![1.0; n];
    for lambda in [0.0, 0.01, 0.05, 0.2] {
        let mut beta = vec![0.0; 4];
        let mut b0 = 0.0;
        weighted_lasso_cd(&q, &z, &w, lambda, &mut beta, &mut b0, false, 1000, 1e-14).unwrap();
        for j in 0..4 {
            let xy: f64 = (0..n).map(|i| q[(i, j)] * z[i]).sum();
            let t = n as f64 * lambda;
            let expect = xy.signum() * (xy.abs() - t).max(0.0);
            assert!((beta[j] - expect).abs() < 1e-6, "λ {lambda} j {j}: {} vs {expect}", beta[j]);
        }
    }
}

#[test]
fn lasso_path_selects_informative_features() {
    let fm = synthetic(120, 10, 2, 1.5, 11);
    let x = dosesim_ml::scaler::Standardizer::fit(&fm.x).transform(&fm.x);
    let path = lambda_path(&x, &fm.labels);
    assert_eq!(path.len(), 20);
    assert!((path[0] / path[19] - 1000.0).abs() < 1e-9);
    let at_max = fit_l1(&x, &fm.labels, path[0], 100, 1e-9).unwrap();
    assert!(at_max.coef.iter().all(|&b| b == 0.0));
    let sel = lasso_select(&x, &fm.labels, &path, 5, RngStream::new(1)).unwrap();
    assert!(sel.indices.contains(&0) && sel.indices.contains(&1), "{:?}", sel.indices);
    assert!(sel.cv_auc > 0.8);
}

#[test]
fn mrmr_matches_exhaustive_oracle() {
    let n = 40;
    let f0: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let f2: Vec<usize> = (0..n).map(|i| (i / 4 + i) % 4).collect();
    let y: Vec<u8> = (0..n).map(|i| u8::from((f0[i] >= 2) != (i % 8 == 3))).collect();
    let cols = [f0.clone(), f0.clone(), f2.clone()];
    let x = DMatrix::from_fn(n, 3, |i, j| cols[j][i] as f64);
    let yc: Vec<usize> = y.iter().map(|&v| v as usize).collect();
    let rel: Vec<f64> = cols.iter().map(|c| mi_oracle(c, &yc)).collect();
    let mut expect = Vec::new();
    for _ in 0..3 {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in 0..3 {
            if expect.contains(&j) {
                continue;
            }
            let red = if expect.is_empty() {
                0.0
            } else {
                expect.iter().map(|&s: &usize| mi_oracle(&cols[j], &cols[s])).sum::<f64>() / expect.len() as f64
            };
            if rel[j] - red > best.1 + 1e-12 {
                best = (j, rel[j] - red);
            }
        }
        expect.push(best.0);
    }
    let got = mrmr_select(&x, &y, 3).unwrap();
    assert_eq!(got, expect);
    assert_eq!(got[0], 0);
    assert_ne!(got[1], 1, "duplicate picked second");
}

#[test]
fn pca_recovers_dominant_axis() {
    let mut r = rng(13);
    let x = DMatrix::from_fn(200, 2, |_, j| if j == 0 { 5.0 * normal(&mut r) } else { 0.5 * normal(&mut r) });
    let p = Pca::fit(&x, 2).unwrap();
    assert!(p.components[0][0].abs() > 0.99);
    assert!(p.components[0][0] > 0.0);
    let xs = synthetic(50, 6, 0, 0.0, 17).x;
    let full = Pca::fit(&xs, 6).unwrap();
    assert!(full.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    let mut last = f64::INFINITY;
    for k in 1..=6 {
        let pk = Pca::fit(&xs, k).unwrap();
        let err = (pk.reconstruct(&pk.transform(&xs)) - &xs).norm();
        assert!(err < last + 1e-12);
        last = err;
    }
    assert!(last < 1e-9);
    assert!(Pca::fit(&xs, 7).is_err());
}

#[test]
fn rfe_drops_noise_before_signal() {
    let mut fm = synthetic(100, 4, 0, 0.0, 19);
    for i in 0..100 {
        fm.x[(i, 2)] = fm.labels[i] as f64 * 2.0 - 1.0 + 0.3 * fm.x[(i, 2)];
    }
    let x = dosesim_ml::scaler::Standardizer::fit(&fm.x).transform(&fm.x);
    assert_eq!(rfe_select(&x, &fm.labels, 1).unwrap(), vec![2]);
}

#[test]
fn forest_importance_ranks_label_copy_first() {
    let mut fm = synthetic(100, 6, 0, 0.0, 23);
    let mut r = rng(29);
    for i in 0..100 {
        fm.x[(i, 4)] = fm.labels[i] as f64 + 0.05 * r.random::<f64>();
    }
    let (idx, imp) = rf_importance_select(&fm.x, &fm.labels, 2, RngStream::new(3)).unwrap();
    assert_eq!(idx[0], 4);
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn stability_with_jittered_copies() {
    let fm = synthetic(30, 3, 1, 1.0, 31);
    let pert: Vec<FeatureMatrix> = (0..2).map(|s| jitter(&fm, 0.05, 40 + s)).collect();
    assert_eq!(stability_filter(&fm, &pert, 0.75).unwrap().len(), 3);
}

#[test]
fn mann_whitney_tie_heavy_hand_case() {
    // Pairs won by positives: 5 clear, 1 tie → U = 5.5 of 6. Tie groups
    // {2,2} and {3,3} give Σ(t³-t) = 12, variance 6/12·(6 - 12/20) = 2.7.
    let r = mann_whitney(&[1.0, 2.0], &[2.0, 3.0, 3.0]).unwrap();
    assert!((r.u - 5.5).abs() < 1e-12);
    let z = (2.5f64 - 0.5) / 2.7f64.sqrt();
    let expect = 2.0 * (1.0 - statrs::distribution::ContinuousCDF::cdf(&statrs::distribution::Normal::standard(), z));
    assert!((r.p - expect).abs() < 1e-12);
}

#[test]
fn stability_threshold_zero_keeps_everything() {
    let fm = synthetic(20, 3, 0, 0.0, 41);
    let noise: Vec<FeatureMatrix> = (0..2).map(|s| jitter(&fm, 10.0, 50 + s)).collect();
    assert_eq!(stability_filter(&fm, &noise, 0.0).unwrap().len(), 3);
}

#[test]
fn logistic_symmetric_data_is_even_at_origin() {
    let x = DMatrix::from_column_slice(8, 1, &[-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]);
    let y = [0, 0, 1, 0, 1, 0, 1, 1];
    let m = dosesim_ml::logistic::fit_l2(&x, &y, 1.0, 100, 1e-12).unwrap();
    assert!((m.predict_proba_row(&[0.0]) - 0.5).abs() < 1e-6);
}

#[test]
fn rfe_with_k_equal_to_p_keeps_all() {
    let fm = synthetic(30, 4, 1, 1.0, 43);
    assert_eq!(rfe_select(&fm.x, &fm.labels, 4).unwrap(), vec![0, 1, 2, 3]);
}
