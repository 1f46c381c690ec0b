#![allow(dead_code)]

use dosesim_ml::FeatureMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

/// `n` rows, `p` features, the first `informative` shifted by `shift`
/// for positives. Labels alternate so both classes are balanced.
pub fn synthetic(n: usize, p: usize, informative: usize, shift: f64, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = DMatrix::from_fn(n, p, |i, j| {
        let base = normal(&mut r);
        if j < informative { base + shift * labels[i] as f64 } else { base }
    });
    let names = (0..p).map(|j| format!("f{j:02}")).collect();
    let groups = (0..n).map(|i| format!("s{i:03}")).collect();
    let ids = (0..n).map(|i| format!("n{i:03}")).collect();
    FeatureMatrix::new(names, x, labels, groups, ids).unwrap()
}

/// Copy of `fm` with additive Gaussian noise of standard deviation `sd`.
pub fn jitter(fm: &FeatureMatrix, sd: f64, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let mut out = fm.clone();
    out.x.iter_mut().for_each(|v| *v += sd * normal(&mut r));
    out
}
