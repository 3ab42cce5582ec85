//! Cross-checks against independent computations: inertia counting for the
//! eigensolver, direct quadrature for the law, closed forms for truncation.

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wigner_core::ensemble::{
    make_distribution, sample_wigner, truncate_center_rescale, truncation_stats, EntryKind, SymmetricMatrix,
    WignerSpec,
};
use wigner_core::law::{sc_cdf, sc_pdf, sc_stieltjes_scaled, SemicircleLaw, UpperHalfPoint};
use wigner_core::quad::{gauss_kronrod, tanh_sinh, GkOptions};
use wigner_core::spectra::{eigenvalues, esd, kolmogorov_distance, StepCdf};
use wigner_core::Complex64;

/// Number of eigenvalues below `x`: negative pivots of the LDLᵀ
/// factorization of `A - xI` (Sylvester's law of inertia).
fn count_below(dense: &[f64], n: usize, x: f64) -> usize {
    let mut a = dense.to_vec();
    for i in 0..n {
        a[i * n + i] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut p = a[k * n + k];
        if p == 0.0 {
            p = -1e-300;
        }
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = a[i * n + k] / p;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    negatives
}

fn bisect_eigenvalue(dense: &[f64], n: usize, k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if count_below(dense, n, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn eigenvalues_match_inertia_bisection() {
    for (seed, n) in [(1u64, 5usize), (2, 17), (3, 40)] {
        let m = sample_wigner(&WignerSpec::gaussian(n, seed)).unwrap();
        let dense = m.to_dense();
        let bound = (m.frobenius_sq()).sqrt() + 1.0;
        let s = eigenvalues(&m).unwrap();
        for (k, &lambda) in s.eigenvalues().iter().enumerate() {
            let oracle = bisect_eigenvalue(&dense, n, k, -bound, bound);
            assert!((lambda - oracle).abs() < 1e-9, "n={n} k={k}: {lambda} vs {oracle}");
        }
    }
}

#[test]
fn minor_eigenvalues_interlace() {
    let n = 30;
    let m = sample_wigner(&WignerSpec::gaussian(n, 8)).unwrap();
    let full = eigenvalues(&m).unwrap();
    for skip in [0, 13, n - 1] {
        let minor = SymmetricMatrix::from_dense(&m.minor_dense(skip), n - 1, 0).unwrap();
        let sub = eigenvalues(&minor).unwrap();
        for (k, &mu) in sub.eigenvalues().iter().enumerate() {
            let (lo, hi) = (full.eigenvalues()[k], full.eigenvalues()[k + 1]);
            assert!(lo - 1e-12 <= mu && mu <= hi + 1e-12);
        }
    }
}

#[test]
fn exact_kolmogorov_distance_dominates_a_fine_grid() {
    let m = sample_wigner(&WignerSpec::gaussian(64, 4)).unwrap();
    let f = esd(&eigenvalues(&m).unwrap()).unwrap();
    let law = SemicircleLaw::default();
    let exact = kolmogorov_distance(&f, &law);
    let mut grid: f64 = 0.0;
    for k in 0..=200_000 {
        let x = -3.0 + 6.0 * k as f64 / 200_000.0;
        grid = grid.max((f.eval(x) - law.cdf(x)).abs());
    }
    // grid sup never exceeds the supremum and approaches it from below
    assert!(grid <= exact + 1e-15);
    assert!(exact - grid < 1e-3);
}

#[test]
fn cdf_is_the_integral_of_the_density() {
    for sigma in [0.5, 1.0, 1.7] {
        let edge = 2.0 * sigma;
        for k in 0..40 {
            let x = -edge + 2.0 * edge * k as f64 / 39.0;
            let q = tanh_sinh(|t, _, _| sc_pdf(t, sigma), -edge, x, 1e-13).unwrap().value;
            assert!((q - sc_cdf(x, sigma)).abs() < 1e-10, "sigma={sigma} x={x}");
        }
    }
}

#[test]
fn semicircle_moments_are_catalan() {
    let law = SemicircleLaw::new(1.3).unwrap();
    let s2 = 1.3f64 * 1.3;
    let moment = |k: i32| {
        tanh_sinh(|x, _, _| x.powi(k) * law.pdf(x), -law.edge(), law.edge(), 1e-14)
            .unwrap()
            .value
    };
    assert_abs_diff_eq!(moment(0), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(moment(2), s2, epsilon = 1e-12);
    assert_abs_diff_eq!(moment(4), 2.0 * s2 * s2, epsilon = 1e-11);
    assert_abs_diff_eq!(moment(6), 5.0 * s2 * s2 * s2, epsilon = 1e-10);
}

#[test]
fn stieltjes_matches_direct_integration() {
    for sigma in [1.0, 0.8] {
        let law = SemicircleLaw::new(sigma).unwrap();
        for (u, v) in [(0.0, 1.0), (1.5, 0.3), (-2.5, 0.5), (3.0, 2.0)] {
            let z = Complex64::new(u, v);
            let re = tanh_sinh(|x, _, _| ((1.0 / (x - z)) * law.pdf(x)).re, -law.edge(), law.edge(), 1e-13)
                .unwrap()
                .value;
            let im = tanh_sinh(|x, _, _| ((1.0 / (x - z)) * law.pdf(x)).im, -law.edge(), law.edge(), 1e-13)
                .unwrap()
                .value;
            let s = law.stieltjes(UpperHalfPoint::new(u, v).unwrap());
            assert!((s - Complex64::new(re, im)).norm() < 1e-9, "{z}: {s}");
            assert_eq!(s, sc_stieltjes_scaled(z, sigma));
        }
    }
}

#[test]
fn gaussian_truncation_matches_closed_form() {
    // T = 16^{1/4} = 2
    let level: f64 = 2.0;
    let phi = (-0.5 * level * level).exp() / (2.0 * PI).sqrt();
    // erf(√2)
    let retained = 0.954_499_736_103_641_6;
    let second = retained - 2.0 * level * phi;
    let stats = truncation_stats(EntryKind::Gaussian, level).unwrap();
    assert_abs_diff_eq!(stats.retained, retained, epsilon = 1e-12);
    assert_abs_diff_eq!(stats.mean, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(stats.variance, second, epsilon = 1e-12);
    assert_abs_diff_eq!(stats.variance, 0.7386, epsilon = 1e-4);
    // conditional variance of the truncated normal
    assert_abs_diff_eq!(stats.variance / stats.retained, 0.7737, epsilon = 1e-4);
    let prepared = truncate_center_rescale(&make_distribution(EntryKind::Gaussian).unwrap(), 16).unwrap();
    assert_abs_diff_eq!(prepared.scale(), second.sqrt(), epsilon = 1e-12);
}

#[test]
fn prepared_entries_have_their_stated_moments() {
    let kinds = [
        EntryKind::Gaussian,
        EntryKind::Uniform,
        EntryKind::StudentT { df: 3.0 },
        EntryKind::TwoPoint { p: 0.2 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in kinds {
        let d = truncate_center_rescale(&make_distribution(kind).unwrap(), 256).unwrap();
        let reps = 400_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..reps {
            let x = d.sample(&mut rng);
            m1 += x;
            m2 += x * x;
            m4 += x.powi(4);
        }
        let r = reps as f64;
        let mo = d.moments();
        // standard errors: sd(x)/√r, sd(x²)/√r, sd(x⁴)/√r
        let se1 = (1.0 / r).sqrt();
        let se2 = ((mo.nu4 - 1.0) / r).sqrt();
        assert!((m1 / r).abs() < 5.0 * se1, "{kind:?} mean");
        assert!((m2 / r - 1.0).abs() < 5.0 * se2, "{kind:?} variance");
        let bound = d.support_bound().unwrap();
        let se4 = ((bound.powi(8) - mo.nu4 * mo.nu4).max(0.0) / r).sqrt();
        assert!((m4 / r - mo.nu4).abs() < 5.0 * se4, "{kind:?} fourth moment");
    }
}

#[test]
fn second_moment_of_the_spectrum() {
    // (1/n) tr W² = (1/n²) Σ x_ij², expectation 1 + (σ² - 1)/n
    let mut total = 0.0;
    let reps = 40;
    for seed in 0..reps {
        let s = eigenvalues(&sample_wigner(&WignerSpec::gaussian(100, seed)).unwrap()).unwrap();
        total += s.eigenvalues().iter().map(|x| x * x).sum::<f64>() / 100.0;
    }
    assert_abs_diff_eq!(total / reps as f64, 1.0, epsilon = 0.02);
}

#[test]
fn gauss_kronrod_handles_resonances_of_a_step_transform() {
    // |s_F(u + iv)|² for F = δ₀ integrates to π/v
    let v = 0.01;
    let opts = GkOptions { initial_pieces: 64, ..GkOptions::default() };
    let q = gauss_kronrod(|u| 1.0 / (u * u + v * v), -50.0, 50.0, opts).unwrap();
    let exact = 2.0 / v * (50.0 / v).atan();
    assert!((q.value - exact).abs() < 1e-8 * exact);
    let f = StepCdf::from_samples(&[0.0]).unwrap();
    assert_eq!(f.points(), &[0.0]);
}

#[test]
fn random_spectra_cdf_distance_is_symmetric_under_reflection() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let law = SemicircleLaw::default();
    for _ in 0..20 {
        let xs: Vec<f64> = (0..31).map(|_| rng.random_range(-2.5..2.5)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -x).collect();
        let a = kolmogorov_distance(&StepCdf::from_samples(&xs).unwrap(), &law);
        let b = kolmogorov_distance(&StepCdf::from_samples(&ys).unwrap(), &law);
        assert!((a - b).abs() < 1e-12);
    }
}
