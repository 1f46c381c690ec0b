mod common;

use common::{normal, rng};
use dosesim_ml::bootstrap::{bootstrap_metrics, BootstrapConfig};
use dosesim_ml::stats::{percentile, WILCOXON_EXACT_MAX};
use dosesim_ml::{bonferroni, bonferroni_adjust, compare_methods, friedman, roc_auc, wilcoxon_signed_rank};
use proptest::prelude::*;
use rand::Rng;

/// Two-sided p by enumerating all 2^n sign patterns over the ranks.
fn wilcoxon_enumerated(d: &[f64]) -> f64 {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        for k in i..=j {
            ranks[order[k]] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    let total: f64 = ranks.iter().sum();
    let wp: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let w = wp.min(total - wp);
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if s.min(total - s) <= w + 1e-9 {
            hits += 1;
        }
    }
    // Symmetric null: P(min <= w) = 2 P(T <= w) unless the tails overlap.
    (hits as f64 / (1u64 << n) as f64).min(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn wilcoxon_exact_matches_enumeration(d in prop::collection::vec(-4i32..=4, 1..=12)) {
        let a: Vec<f64> = d.iter().map(|&v| v as f64).collect();
        let b = vec![0.0; a.len()];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        if a.iter().all(|v| *v == 0.0) {
            prop_assert_eq!(r.p_value, 1.0);
        } else {
            let oracle = wilcoxon_enumerated(&a);
            prop_assert!((r.p_value - oracle).abs() < 1e-12, "{} vs {}", r.p_value, oracle);
        }
    }

    #[test]
    fn bonferroni_bounds(p in 0.0f64..1.0, m in 1usize..50) {
        let q = bonferroni(p, m);
        prop_assert!(q >= p && q <= 1.0);
        prop_assert!((q - (p * m as f64).min(1.0)).abs() < 1e-15);
    }
}

#[test]
fn wilcoxon_exact_close_to_normal_at_the_switch() {
    let mut r = rng(3);
    let n = WILCOXON_EXACT_MAX;
    let std_normal = statrs::distribution::Normal::standard();
    for _ in 0..20 {
        let a: Vec<f64> = (0..n).map(|_| normal(&mut r) + 0.3).collect();
        let res = wilcoxon_signed_rank(&a, &vec![0.0; n]).unwrap();
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
        let approx = (2.0 * statrs::distribution::ContinuousCDF::cdf(&std_normal, (res.statistic - mean + 0.5) / sd)).min(1.0);
        assert!((res.p_value - approx).abs() < 0.01, "{} vs {approx}", res.p_value);
    }
}

#[test]
fn friedman_detects_consistent_shift() {
    let mut r = rng(5);
    let blocks: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|j| normal(&mut r) + j as f64).collect()).collect();
    let t = friedman(&blocks).unwrap();
    assert!(t.p_value < 1e-6);
    let null: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| normal(&mut r)).collect()).collect();
    assert!(friedman(&null).unwrap().p_value > 1e-3);
}

fn scores(n: usize, sep: f64, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut r = rng(seed);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let s = labels.iter().map(|&l| 1.0 / (1.0 + (-(normal(&mut r) + sep * l as f64)).exp())).collect();
    (s, labels)
}

#[test]
fn bootstrap_is_deterministic_and_brackets_the_point() {
    let (s, l) = scores(80, 1.5, 7);
    let cfg = BootstrapConfig { n_iterations: 400, resample_fraction: 1.0, seed: 42 };
    let a = bootstrap_metrics(&s, &l, 0.5, &cfg).unwrap();
    let b = bootstrap_metrics(&s, &l, 0.5, &cfg).unwrap();
    assert_eq!(a, b);
    for (name, d) in &a.metrics {
        assert_eq!(d.values.len(), 400);
        assert!(d.ci_lo <= d.mean && d.mean <= d.ci_hi, "{name}");
        assert!(d.ci_lo <= d.point && d.point <= d.ci_hi, "{name}");
        assert!((d.ci_lo - percentile(&d.values, 2.5)).abs() < 1e-15);
    }
    let auc = &a.metrics["auc"];
    assert!(auc.ci_hi - auc.ci_lo > 0.02);
}

#[test]
fn bootstrap_single_class_input_fails() {
    let s = vec![0.1, 0.2, 0.3];
    assert!(bootstrap_metrics(&s, &[1, 1, 1], 0.5, &BootstrapConfig::default()).is_err());
}

#[test]
fn bootstrap_tiny_sets_redraw_single_class_resamples() {
    let cfg = BootstrapConfig { n_iterations: 200, resample_fraction: 1.0, seed: 1 };
    let r = bootstrap_metrics(&[0.2, 0.8, 0.4], &[0, 1, 0], 0.5, &cfg).unwrap();
    assert!(r.metrics["auc"].values.iter().all(|v| v.is_finite()));
}

#[test]
fn compare_flags_the_better_method() {
    let (s1, l) = scores(100, 2.5, 11);
    let mut r = rng(12);
    let s2: Vec<f64> = s1.iter().map(|v| (v + 0.6 * (r.random::<f64>() - 0.5)).clamp(0.0, 1.0)).collect();
    let s3: Vec<f64> = (0..100).map(|_| r.random::<f64>()).collect();
    let cfg = BootstrapConfig { n_iterations: 300, resample_fraction: 1.0, seed: 5 };
    let res: Vec<(String, _)> = [("good", &s1), ("noisy", &s2), ("random", &s3)]
        .iter()
        .map(|(n, s)| (n.to_string(), bootstrap_metrics(s, &l, 0.5, &cfg).unwrap()))
        .collect();
    let rep = compare_methods(&res, 0.05).unwrap();
    let auc = &rep.tests["auc"];
    assert!(auc.significant);
    assert_eq!(auc.pairwise.len(), 3);
    let gr = auc.pairwise.iter().find(|p| p.a == "good" && p.b == "random").unwrap();
    assert!(gr.significant);
    assert!((gr.p_adjusted - bonferroni(gr.p_value, 3)).abs() < 1e-15);
    assert!(rep.methods["good"]["auc"].mean > rep.methods["random"]["auc"].mean);
}

#[test]
fn compare_refuses_misaligned_bootstraps() {
    let (s, l) = scores(40, 1.0, 13);
    let a = bootstrap_metrics(&s, &l, 0.5, &BootstrapConfig { n_iterations: 50, resample_fraction: 1.0, seed: 1 }).unwrap();
    let b = bootstrap_metrics(&s, &l, 0.5, &BootstrapConfig { n_iterations: 50, resample_fraction: 1.0, seed: 2 }).unwrap();
    assert!(compare_methods(&[("a".into(), a.clone()), ("b".into(), b)], 0.05).is_err());
    let c = bootstrap_metrics(&s, &l, 0.5, &BootstrapConfig { n_iterations: 60, resample_fraction: 1.0, seed: 1 }).unwrap();
    assert!(compare_methods(&[("a".into(), a), ("c".into(), c)], 0.05).is_err());
}

#[test]
fn wilcoxon_identical_samples_are_degenerate() {
    let x = [1.0, 2.0, 3.0];
    let r = wilcoxon_signed_rank(&x, &x).unwrap();
    assert!(r.degenerate());
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn bonferroni_examples() {
    let q = bonferroni_adjust(&[0.01, 0.5], 3);
    assert!((q[0] - 0.03).abs() < 1e-15);
    assert_eq!(q[1], 1.0);
    assert_eq!(bonferroni(0.2, 1), 0.2);
}

#[test]
fn friedman_symmetry_and_dominance() {
    let mut r = rng(17);
    let blocks: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| normal(&mut r)).collect()).collect();
    let permuted: Vec<Vec<f64>> = blocks.iter().map(|b| vec![b[2], b[0], b[3], b[1]]).collect();
    let (a, b) = (friedman(&blocks).unwrap(), friedman(&permuted).unwrap());
    assert!((a.statistic - b.statistic).abs() < 1e-9);
    let offset: Vec<Vec<f64>> = (0..1000).map(|_| { let v = normal(&mut r); vec![v, v + 0.01] }).collect();
    assert!(friedman(&offset).unwrap().p_value < 0.05);
    assert!(friedman(&[vec![1.0, 2.0]]).is_err());
}

#[test]
fn compare_identical_methods_skips_pairwise() {
    let (s, l) = scores(60, 1.0, 19);
    let cfg = BootstrapConfig { n_iterations: 100, resample_fraction: 1.0, seed: 3 };
    let b = bootstrap_metrics(&s, &l, 0.5, &cfg).unwrap();
    let rep = compare_methods(&[("x".into(), b.clone()), ("y".into(), b)], 0.05).unwrap();
    for t in rep.tests.values() {
        assert_eq!(t.friedman.p_value, 1.0);
        assert!(t.pairwise.is_empty());
    }
}

#[test]
fn bootstrap_edge_cases() {
    let (s, l) = scores(300, 1.0, 23);
    let cfg = BootstrapConfig { n_iterations: 1000, resample_fraction: 1.0, seed: 8 };
    let r = bootstrap_metrics(&s, &l, 0.5, &cfg).unwrap();
    let full = roc_auc(&s, &l).unwrap();
    assert!((r.metrics["auc"].mean - full).abs() < 0.02);

    let one = BootstrapConfig { n_iterations: 1, resample_fraction: 1.0, seed: 8 };
    let a = bootstrap_metrics(&s, &l, 0.5, &one).unwrap();
    assert_eq!(a, bootstrap_metrics(&s, &l, 0.5, &one).unwrap());
    assert_eq!(a.metrics["auc"].values.len(), 1);

    let perfect: Vec<f64> = l.iter().map(|&v| v as f64 * 0.8 + 0.1).collect();
    let p = bootstrap_metrics(&perfect, &l, 0.5, &BootstrapConfig { n_iterations: 50, ..cfg }).unwrap();
    for d in p.metrics.values() {
        assert_eq!(d.ci_hi - d.ci_lo, 0.0);
    }
}

#[test]
fn bootstrap_resamples_are_shared_across_methods() {
    // Same seed and labels: a method equal to another plus a constant
    // shift yields identical rank-based AUC draws.
    let (s, l) = scores(50, 1.0, 29);
    let shifted: Vec<f64> = s.iter().map(|v| v * 0.5).collect();
    let cfg = BootstrapConfig { n_iterations: 100, resample_fraction: 1.0, seed: 4 };
    let a = bootstrap_metrics(&s, &l, 0.5, &cfg).unwrap();
    let b = bootstrap_metrics(&shifted, &l, 0.25, &cfg).unwrap();
    assert_eq!(a.metrics["auc"].values, b.metrics["auc"].values);
    assert_eq!(a.metrics["sensitivity"].values, b.metrics["sensitivity"].values);
}
