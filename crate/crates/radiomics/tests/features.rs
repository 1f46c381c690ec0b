use dosesim_core::{CtVolume, Dims, Geometry, IntensityUnit, NoduleMask};
use dosesim_radiomics::firstorder::firstorder_features;
use dosesim_radiomics::glcm::{glcm_features, glcm_features_of, glcm_matrices};
use dosesim_radiomics::grid::Grid3;
use dosesim_radiomics::perturb::{perturb_roi, PerturbMode, PerturbationSpec};
use dosesim_radiomics::shape::shape_features;
use dosesim_radiomics::wavelet::{wavelet_decompose, BANDS};
use dosesim_radiomics::{
    discretize_fixed_bins, extract_all, extract_roi, feature_names, zscore_normalize, ExtractionConfig, LevelGrid, Roi,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn ellipsoid(semi: [f64; 3], spacing: f64) -> Grid3<bool> {
    let n = semi.map(|a| (2.0 * a / spacing).ceil() as usize + 3);
    let c = n.map(|k| (k as f64 - 1.0) / 2.0);
    Grid3::from_fn(n, |x, y, z| {
        let p = [x, y, z];
        (0..3).map(|a| ((p[a] as f64 - c[a]) * spacing / semi[a]).powi(2)).sum::<f64>() <= 1.0
    })
}

const SPHERICITY: usize = 4;
const MAJOR_AXIS: usize = 9;

#[test]
fn ball_sphericity_in_range() {
    for r in [8.0, 10.0, 15.0] {
        let f = shape_features(&ellipsoid([r; 3], 1.0), [1.0; 3]).unwrap();
        assert!((0.95..=1.0).contains(&f[SPHERICITY]), "r={r}: {}", f[SPHERICITY]);
    }
}

#[test]
fn ellipsoid_major_axis() {
    let f = shape_features(&ellipsoid([20.0, 10.0, 10.0], 1.0), [1.0; 3]).unwrap();
    let want = 4.0 * 20.0 / 5f64.sqrt();
    assert!((f[MAJOR_AXIS] - want).abs() / want < 0.03, "{} vs {want}", f[MAJOR_AXIS]);
}

#[test]
fn cube_less_spherical_than_ball() {
    let cube = Grid3::from_fn([20, 20, 20], |x, y, z| [x, y, z].iter().all(|&v| (2..18).contains(&v)));
    // Same voxel volume: 16³ = 4096 ≈ (4/3)π r³ → r ≈ 9.93.
    let ball = ellipsoid([9.93; 3], 1.0);
    let fc = shape_features(&cube, [1.0; 3]).unwrap();
    let fb = shape_features(&ball, [1.0; 3]).unwrap();
    assert!(fc[SPHERICITY] < fb[SPHERICITY]);
}

#[test]
fn shape_ignores_intensities_and_spacing_scales_volume() {
    let m = ellipsoid([5.0, 4.0, 3.0], 1.0);
    let a = shape_features(&m, [1.0; 3]).unwrap();
    let b = shape_features(&m, [2.0; 3]).unwrap();
    assert!((b[0] / a[0] - 8.0).abs() < 1e-9);
    assert!((b[SPHERICITY] - a[SPHERICITY]).abs() < 1e-9);
}

fn random_grid(dims: [usize; 3], seed: u64) -> Grid3<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Grid3::from_fn(dims, |_, _, _| rng.random_range(-3.0..3.0))
}

#[test]
fn wavelet_energy_conserved_on_even_dims() {
    for (dims, seed) in [([8, 6, 4], 1), ([2, 2, 2], 2), ([16, 10, 12], 3)] {
        let g = random_grid(dims, seed);
        let e_in: f64 = g.data().iter().map(|v| v * v).sum();
        let e_out: f64 = wavelet_decompose(&g).iter().flat_map(|b| b.data().iter()).map(|v| v * v).sum();
        assert!((e_in - e_out).abs() <= 1e-9 * e_in.max(1.0), "{e_in} vs {e_out}");
    }
}

#[test]
fn wavelet_constant_and_impulse() {
    let c = 1.7;
    let bands = wavelet_decompose(&Grid3::filled([6, 4, 5], c));
    assert_eq!(bands.len(), BANDS.len());
    let lll = c * 2f64.powf(1.5);
    assert!(bands[0].data().iter().all(|&v| (v - lll).abs() < 1e-12));
    assert!(bands[1..].iter().all(|b| b.data().iter().all(|&v| v == 0.0)));

    let mut g = Grid3::filled([4, 4, 4], 0.0);
    g.set(2, 0, 2, 1.0);
    let m = 2f64.powf(-1.5);
    for b in wavelet_decompose(&g) {
        assert!((b.get(1, 0, 1).abs() - m).abs() < 1e-12);
        assert_eq!(b.data().iter().filter(|v| **v != 0.0).count(), 1);
    }
}

#[test]
fn dilation_of_big_ball_takes_one_step() {
    let ball = ellipsoid([15.0; 3], 1.0);
    let mut m = Grid3::filled([40, 40, 40], false);
    let d = ball.dims();
    for z in 0..d[2] {
        for y in 0..d[1] {
            for x in 0..d[0] {
                if *ball.get(x, y, z) {
                    m.set(x + 3, y + 3, z + 3, true);
                }
            }
        }
    }
    let p = perturb_roi(&m, &PerturbationSpec::new(PerturbMode::Dilate, 0.15, 0).unwrap()).unwrap();
    assert_eq!(p.steps, 1);
    let rel = (p.mask.count() as f64 - m.count() as f64) / m.count() as f64;
    // Shell estimate 3·Δr/r = 0.2.
    assert!((0.15..0.25).contains(&rel), "{rel}");
    let e = perturb_roi(&m, &PerturbationSpec::new(PerturbMode::Erode, 0.15, 0).unwrap()).unwrap();
    assert_eq!(e.steps, 1);
    assert!(e.mask.count() < m.count());
}

#[test]
fn contour_noise_is_seeded() {
    let m = ellipsoid([6.0; 3], 1.0);
    let run = |seed| perturb_roi(&m, &PerturbationSpec::new(PerturbMode::ContourNoise, 0.15, seed).unwrap()).unwrap();
    assert_eq!(run(3), run(3));
    assert_ne!(run(3).mask, run(4).mask);
    assert_ne!(run(3).mask, m);
}

#[test]
fn discretization_examples() {
    let n = 64;
    let image = Grid3::from_fn([n, 1, 1], |x, _, _| x as f64);
    let roi = Roi::new(image, Grid3::filled([n, 1, 1], true), [1.0; 3]).unwrap();
    let lv = discretize_fixed_bins(&roi, 32).unwrap();
    assert_eq!(lv.levels.data()[0], 1);
    assert_eq!(lv.levels.data()[n - 1], 32);
    let mut counts = [0usize; 33];
    for &l in lv.levels.data() {
        counts[l as usize] += 1;
    }
    let (lo, hi) = (counts[1..].iter().min().unwrap(), counts[1..].iter().max().unwrap());
    assert!(hi - lo <= 1, "{:?}", &counts[1..]);
}

#[test]
fn two_voxel_firstorder() {
    let image = Grid3::from_vec([2, 1, 1], vec![0.0, 1.0]);
    let roi = Roi::new(image, Grid3::filled([2, 1, 1], true), [1.0; 3]).unwrap();
    let f = firstorder_features(&roi, &discretize_fixed_bins(&roi, 32).unwrap()).unwrap();
    assert_eq!(f[7], 0.5);
    assert_eq!(f[16], 0.25);
    assert_eq!(f[2], 1.0);
}

#[test]
fn checkerboard_maximizes_axis_glcm_contrast() {
    // Same 50/50 histogram, different arrangements on 4×4×1. Along the x and
    // y axes every checkerboard pair differs; direction-averaged contrast
    // also counts diagonals, where stripes win.
    let patterns: Vec<Box<dyn Fn(usize, usize) -> u8>> = vec![
        Box::new(|x, y| 1 + ((x + y) % 2) as u8),
        Box::new(|x, _| 1 + (x % 2) as u8),
        Box::new(|x, _| 1 + (x / 2) as u8),
        Box::new(|x, y| 1 + ((x / 2 + y / 2) % 2) as u8),
    ];
    let contrast: Vec<f64> = patterns
        .iter()
        .map(|p| {
            let g = Grid3::from_fn([4, 4, 1], |x, y, _| p(x, y));
            let mats = glcm_matrices(&LevelGrid::new(g, 2).unwrap());
            (glcm_features_of(&mats[0], 2)[5] + glcm_features_of(&mats[1], 2)[5]) / 2.0
        })
        .collect();
    assert!(contrast[1..].iter().all(|&c| c < contrast[0]), "{contrast:?}");
    assert_eq!(contrast[0], 1.0);

    let board = Grid3::from_fn([4, 4, 1], |x, y, _| 1 + ((x + y) % 2) as u8);
    let stripes = Grid3::from_fn([4, 4, 1], |x, _, _| 1 + (x % 2) as u8);
    let avg = |g| glcm_features(&LevelGrid::new(g, 2).unwrap())[5];
    assert!((avg(board) - 0.5).abs() < 1e-12);
    assert!((avg(stripes) - 0.75).abs() < 1e-12);
}

#[test]
fn zscore_affine_invariance() {
    let g = random_grid([5, 4, 3], 9);
    let a = zscore_normalize(&g).unwrap();
    let b = zscore_normalize(&g.map(|v| 3.5 * v - 20.0)).unwrap();
    for (x, y) in a.data().iter().zip(b.data()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(zscore_normalize(&Grid3::filled([2, 2, 2], 4.0)).is_err());
}

fn phantom(n: usize, center: [usize; 3], seed: u64) -> (CtVolume, NoduleMask) {
    let g = Geometry::new(Dims::new(n, n, n), [1.0; 3], [0.0; 3]).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise: Vec<f32> = (0..n * n * n).map(|_| rng.random_range(-30.0..30.0)).collect();
    let mut vals = vec![0f32; n * n * n];
    let mut mask = vec![0u8; n * n * n];
    let d = g.dims;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let r2 = [x, y, z].iter().zip(center).map(|(&p, c)| (p as f64 - c as f64).powi(2)).sum::<f64>();
                let i = d.index(x, y, z);
                let inside = r2 <= 36.0;
                mask[i] = inside as u8;
                vals[i] = if inside { 40.0 } else { -800.0 };
            }
        }
    }
    // Noise follows the nodule so translated copies see the same texture.
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (sx, sy, sz) = ((x + n - center[0]) % n, (y + n - center[1]) % n, (z + n - center[2]) % n);
                vals[d.index(x, y, z)] += noise[d.index(sx, sy, sz)];
            }
        }
    }
    (
        CtVolume::new(g.clone(), vals, IntensityUnit::Hu).unwrap(),
        NoduleMask::new(g, mask, "n1", 3.0).unwrap(),
    )
}

#[test]
fn extraction_count_determinism_translation() {
    assert_eq!(feature_names().len(), 851);
    let cfg = ExtractionConfig::default();
    let (v, m) = phantom(40, [15, 16, 17], 1);
    let a = extract_all(&v, &m, &cfg, None).unwrap();
    assert_eq!(a.len(), 851);
    assert!(a.values.iter().all(|x| x.is_finite()));
    assert_eq!(a, extract_all(&v, &m, &cfg, None).unwrap());

    let (v2, m2) = phantom(40, [21, 19, 20], 1);
    let b = extract_all(&v2, &m2, &cfg, None).unwrap();
    assert_eq!(a, b);

    let spec = PerturbationSpec::new(PerturbMode::Dilate, 0.15, 0).unwrap();
    let p = extract_all(&v, &m, &cfg, Some(&spec)).unwrap();
    assert!(p.get("original_shape_VoxelVolume").unwrap() > a.get("original_shape_VoxelVolume").unwrap());
}

#[test]
fn resampled_extraction_is_finite() {
    let g = Geometry::new(Dims::new(24, 24, 10), [0.7, 0.7, 2.5], [0.0; 3]).unwrap();
    let d = g.dims;
    let mut vals = vec![-700f32; d.len()];
    let mut mask = vec![0u8; d.len()];
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let r2 = ((x as f64 - 12.0) * 0.7).powi(2) + ((y as f64 - 12.0) * 0.7).powi(2) + ((z as f64 - 5.0) * 2.5).powi(2);
                if r2 <= 25.0 {
                    mask[d.index(x, y, z)] = 1;
                    vals[d.index(x, y, z)] = 20.0 + (x % 3) as f32 * 15.0;
                }
            }
        }
    }
    let v = CtVolume::new(g.clone(), vals, IntensityUnit::Hu).unwrap();
    let m = NoduleMask::new(g, mask, "n", 2.0).unwrap();
    let f = extract_all(&v, &m, &ExtractionConfig::default(), None).unwrap();
    assert!(f.values.iter().all(|x| x.is_finite()));
    let vol = f.get("original_shape_MeshVolume").unwrap();
    let want = 4.0 / 3.0 * std::f64::consts::PI * 125.0;
    assert!((vol - want).abs() / want < 0.25, "{vol} vs {want}");
}

#[test]
fn degenerate_rois_stay_finite() {
    // Single voxel and constant ROI inside a non-constant patch.
    let image = Grid3::from_fn([5, 5, 5], |x, y, z| if (x, y, z) == (2, 2, 2) { 5.0 } else { (x + y) as f64 });
    let mut single = Grid3::filled([5, 5, 5], false);
    single.set(2, 2, 2, true);
    let f = extract_roi(&Roi::new(image.clone(), single, [1.0; 3]).unwrap(), &ExtractionConfig::default()).unwrap();
    assert!(f.values.iter().all(|v| v.is_finite()));

    let flat = Grid3::from_fn([6, 6, 6], |x, _, _| if x >= 3 { 1.0 } else { 0.0 });
    let mask = Grid3::from_fn([6, 6, 6], |x, _, _| x >= 3);
    let f = extract_roi(&Roi::new(flat, mask, [1.0; 3]).unwrap(), &ExtractionConfig::default()).unwrap();
    assert!(f.values.iter().all(|v| v.is_finite()));
    assert_eq!(f.get("original_firstorder_Variance"), Some(0.0));
    assert_eq!(f.get("original_glcm_Contrast"), Some(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn features_finite_on_random_rois(seed in any::<u64>(), nx in 2usize..7, ny in 2usize..7, nz in 1usize..5) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let image = Grid3::from_fn([nx, ny, nz], |_, _, _| rng.random_range(-1.0..1.0));
        let mut mask = Grid3::from_fn([nx, ny, nz], |_, _, _| rng.random_bool(0.6));
        mask.set(0, 0, 0, true);
        let f = extract_roi(&Roi::new(image, mask, [1.0; 3]).unwrap(), &ExtractionConfig::default()).unwrap();
        prop_assert!(f.values.iter().all(|v| v.is_finite()));
    }
}
