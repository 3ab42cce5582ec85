//! Empirical Stieltjes transforms and leave-one-out resolvent quantities.
//!
//! With `W` the sampled (already `n^{-1/2}`-scaled) matrix, `D = W - zI`,
//! `w_i` the `i`-th column of `W` without its diagonal entry and `D_i` the
//! resolvent argument of the principal minor with row/column `i` removed:
//!
//! ```text
//! β_i = (W_ii - z - w_iᵀ D_i⁻¹ w_i)⁻¹          = (D⁻¹)_ii
//! γ_i = n w_iᵀ D_i⁻¹ w_i - tr D_i⁻¹
//! γ̂_i = n w_iᵀ D_i⁻² w_i - tr D_i⁻²
//! ξ_i = tr D⁻¹ - tr D_i⁻¹
//! ε_i = W_ii - w_iᵀ D_i⁻¹ w_i + E s_n
//! a_n = (z + E s_n)⁻¹,   b_n = (z + 2 E s_n)⁻¹
//! ```
//!
//! `n w_iᵀ D_i⁻¹ w_i` is the quadratic form in the unscaled column `a_i`.
//! `E s_n` is never known exactly; callers pass an estimate.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EntryDistribution, SymmetricMatrix};
use crate::law::UpperHalfPoint;
use crate::linalg::{complex_matmul, operator_norm, ComplexLu};
use crate::spectra::Spectrum;
use crate::{Error, Result};

/// Relative slack for the `1/v` inequalities, absorbing rounding only.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// `s_n(z) = (1/n) Σ 1/(λ_i - z)`.
pub fn empirical_stieltjes(spectrum: &Spectrum, z: UpperHalfPoint) -> Complex64 {
    let z = z.z();
    let n = spectrum.len() as f64;
    spectrum
        .eigenvalues()
        .iter()
        .map(|&l| 1.0 / (l - z))
        .sum::<Complex64>()
        / n
}

/// `(1/n) tr (M - zI)⁻¹` through an LU factorization, independent of the
/// eigensolver.
pub fn resolvent_trace(m: &SymmetricMatrix, z: UpperHalfPoint) -> Result<Complex64> {
    let n = m.n();
    let lu = ComplexLu::shifted(&m.to_dense(), n, z.z())?;
    Ok(lu.inverse_trace() / n as f64)
}

/// Leave-one-out quantities for one index at one `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOutDiag {
    pub index: usize,
    pub n: usize,
    pub z: UpperHalfPoint,
    /// Unscaled diagonal entry `x_ii = √n W_ii`.
    pub x_ii: f64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub gamma_hat: Complex64,
    pub xi: Complex64,
    pub eps: Complex64,
    pub a_n: Complex64,
    pub b_n: Complex64,
    pub es_n_estimate: Complex64,
    /// `s_n(z) = (1/n) tr D⁻¹` of this matrix.
    pub s_n: Complex64,
    /// `(D⁻¹)_ii` from the full resolvent.
    pub resolvent_diag: Complex64,
    /// `tr D_i⁻¹`.
    pub trace_minor: Complex64,
}

impl LeaveOneOutDiag {
    fn assemble(
        index: usize,
        n: usize,
        z: UpperHalfPoint,
        w_ii: f64,
        quad_form: Complex64,
        quad_form_sq: Complex64,
        trace_minor: Complex64,
        trace_minor_sq: Complex64,
        trace_full: Complex64,
        resolvent_diag: Complex64,
        es_n: Complex64,
    ) -> Self {
        let nf = n as f64;
        let zc = z.z();
        LeaveOneOutDiag {
            index,
            n,
            z,
            x_ii: w_ii * nf.sqrt(),
            beta: 1.0 / (w_ii - zc - quad_form),
            gamma: nf * quad_form - trace_minor,
            gamma_hat: nf * quad_form_sq - trace_minor_sq,
            xi: trace_full - trace_minor,
            eps: w_ii - quad_form + es_n,
            a_n: 1.0 / (zc + es_n),
            b_n: 1.0 / (zc + 2.0 * es_n),
            es_n_estimate: es_n,
            s_n: trace_full / nf,
            resolvent_diag,
            trace_minor,
        }
    }

    fn bound(&self) -> f64 {
        (1.0 / self.z.v()) * (1.0 + INEQUALITY_SLACK)
    }

    /// `|β_i| ≤ 1/v`.
    pub fn beta_within_bound(&self) -> bool {
        self.beta.norm() <= self.bound()
    }

    /// `|ξ_i| ≤ 1/v`.
    pub fn xi_within_bound(&self) -> bool {
        self.xi.norm() <= self.bound()
    }

    /// `|β_i - (D⁻¹)_ii|`.
    pub fn schur_residual(&self) -> f64 {
        (self.beta - self.resolvent_diag).norm()
    }

    /// Residual of `ε_i = n^{-1/2} x_ii - γ_i/n + ξ_i/n - (s_n - E s_n)`.
    pub fn eps_identity_residual(&self) -> f64 {
        let nf = self.n as f64;
        let rhs = self.x_ii / nf.sqrt() - self.gamma / nf + self.xi / nf - (self.s_n - self.es_n_estimate);
        (self.eps - rhs).norm()
    }

    /// Residual of `β_i = -a_n + a_n β_i ε_i`.
    pub fn beta_expansion_residual(&self) -> f64 {
        (self.beta - (-self.a_n + self.a_n * self.beta * self.eps)).norm()
    }

    /// `|a_n| < 1`; may fail when `E s_n` is a noisy estimate.
    pub fn a_n_below_one(&self) -> bool {
        self.a_n.norm() < 1.0
    }
}

fn to_complex(dense: &[f64]) -> impl Iterator<Item = Complex64> + '_ {
    dense.iter().map(|&x| Complex64::new(x, 0.0))
}

/// Leave-one-out quantities for index `i`, computed directly from an LU
/// factorization of the minor `D_i`.
pub fn leave_one_out(
    m: &SymmetricMatrix,
    z: UpperHalfPoint,
    i: usize,
    es_n_estimate: Complex64,
) -> Result<LeaveOneOutDiag> {
    let n = m.n();
    if i >= n {
        return Err(Error::InvalidArgument(format!("index {i} out of range for n = {n}")));
    }
    let full = ComplexLu::shifted(&m.to_dense(), n, z.z())?;
    let full_inverse = full.inverse();
    let trace_full: Complex64 = (0..n).map(|k| full_inverse[k * n + k]).sum();
    let resolvent_diag = full_inverse[i * n + i];

    let w_ii = m.get(i, i);
    if n == 1 {
        let zero = Complex64::new(0.0, 0.0);
        return Ok(LeaveOneOutDiag::assemble(
            i,
            n,
            z,
            w_ii,
            zero,
            zero,
            zero,
            zero,
            trace_full,
            resolvent_diag,
            es_n_estimate,
        ));
    }

    let minor = ComplexLu::shifted(&m.minor_dense(i), n - 1, z.z())?;
    let column: Vec<Complex64> = to_complex(
        &(0..n).filter(|&k| k != i).map(|k| m.get(k, i)).collect::<Vec<_>>(),
    )
    .collect();
    let y = minor.solve(&column);
    let quad_form: Complex64 = column.iter().zip(&y).map(|(a, b)| a * b).sum();
    // D_i is complex symmetric, so wᵀ D_i⁻² w = (D_i⁻¹ w)ᵀ (D_i⁻¹ w).
    let quad_form_sq: Complex64 = y.iter().map(|t| t * t).sum();
    let minor_inverse = minor.inverse();
    let m1 = n - 1;
    let trace_minor: Complex64 = (0..m1).map(|k| minor_inverse[k * m1 + k]).sum();
    let trace_minor_sq: Complex64 = minor_inverse.iter().map(|t| t * t).sum();

    Ok(LeaveOneOutDiag::assemble(
        i,
        n,
        z,
        w_ii,
        quad_form,
        quad_form_sq,
        trace_minor,
        trace_minor_sq,
        trace_full,
        resolvent_diag,
        es_n_estimate,
    ))
}

/// Leave-one-out quantities for every index, from one inverse `G = D⁻¹`.
///
/// Uses the block-inverse identities `w_iᵀ D_i⁻¹ w_i = D_ii - 1/G_ii`,
/// `D_i⁻¹ w_i = -G_{·i}/G_ii` and `tr D_i⁻¹ = tr G - (G²)_ii / G_ii`, which
/// brings the cost down to `O(n³)` for all indices together.
pub fn leave_one_out_all(
    m: &SymmetricMatrix,
    z: UpperHalfPoint,
    es_n_estimate: Complex64,
) -> Result<Vec<LeaveOneOutDiag>> {
    let n = m.n();
    let zc = z.z();
    let g = ComplexLu::shifted(&m.to_dense(), n, zc)?.inverse();
    let trace_full: Complex64 = (0..n).map(|k| g[k * n + k]).sum();
    let g2 = complex_matmul(&g, &g, n);
    let trace_g2: Complex64 = (0..n).map(|k| g2[k * n + k]).sum();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let gii = g[i * n + i];
        let g2ii = g2[i * n + i];
        // (G³)_ii = Σ_k (G²)_ik G_ki
        let g3ii: Complex64 = (0..n).map(|k| g2[i * n + k] * g[k * n + i]).sum();
        let w_ii = m.get(i, i);
        let quad_form = (w_ii - zc) - 1.0 / gii;
        let col_sq = g2ii - gii * gii; // Σ_{k≠i} G_ki²
        let quad_form_sq = col_sq / (gii * gii);
        let trace_minor = trace_full - g2ii / gii;
        let restricted_sq = trace_g2 - 2.0 * g2ii + gii * gii;
        let cross = g3ii - 2.0 * gii * g2ii + gii * gii * gii;
        let trace_minor_sq = restricted_sq - 2.0 * cross / gii + col_sq * col_sq / (gii * gii);
        out.push(LeaveOneOutDiag::assemble(
            i,
            n,
            z,
            w_ii,
            quad_form,
            quad_form_sq,
            trace_minor,
            trace_minor_sq,
            trace_full,
            gii,
            es_n_estimate,
        ));
    }
    Ok(out)
}

/// Writes one row per index with real/imaginary parts and bound flags.
pub fn write_diagnostics_csv(rows: &[LeaveOneOutDiag], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let write = |w: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
        writeln!(
            w,
            "i,n,u,v,x_ii,beta_re,beta_im,gamma_re,gamma_im,gamma_hat_re,gamma_hat_im,xi_re,xi_im,\
             eps_re,eps_im,a_n_re,a_n_im,b_n_re,b_n_im,beta_bound_ok,xi_bound_ok,a_n_below_one"
        )?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.index,
                r.n,
                r.z.u(),
                r.z.v(),
                r.x_ii,
                r.beta.re,
                r.beta.im,
                r.gamma.re,
                r.gamma.im,
                r.gamma_hat.re,
                r.gamma_hat.im,
                r.xi.re,
                r.xi.im,
                r.eps.re,
                r.eps.im,
                r.a_n.re,
                r.a_n.im,
                r.b_n.re,
                r.b_n.im,
                r.beta_within_bound(),
                r.xi_within_bound(),
                r.a_n_below_one()
            )?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// Closed-form `Var(XᵀAX - tr A)` for a real symmetric `A` and i.i.d. unit
/// variance entries with fourth moment `nu4`:
/// `(ν₄ - 3) Σ a_ii² + ‖A‖_F² + tr(A²)`.
pub fn quadratic_form_variance(a: &[f64], n: usize, nu4: f64) -> f64 {
    let diag_sq: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
    let frob: f64 = a.iter().map(|x| x * x).sum();
    let trace_sq: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i * n + j] * a[j * n + i])
        .sum();
    (nu4 - 3.0) * diag_sq + frob + trace_sq
}

/// Monte Carlo moments of `XᵀAX - tr A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormMoments {
    pub reps: usize,
    pub mean: f64,
    /// `E|r|²`.
    pub second: f64,
    /// Standard error of `second`.
    pub second_se: f64,
    /// `E|r|⁴`.
    pub fourth: f64,
    /// Closed-form variance for the entry law's `ν₄`.
    pub exact_variance: f64,
}

impl QuadraticFormMoments {
    /// `|second - exact| / se`.
    pub fn z_score(&self) -> f64 {
        if self.second_se == 0.0 {
            if self.second == self.exact_variance {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.second - self.exact_variance).abs() / self.second_se
        }
    }
}

/// Samples `X` with i.i.d. entries from `entries` and estimates the moments
/// of `XᵀAX - tr A`.
pub fn quadratic_form_residual(
    a: &[f64],
    n: usize,
    entries: &EntryDistribution,
    reps: usize,
    seed: u64,
) -> Result<QuadraticFormMoments> {
    if a.len() != n * n {
        return Err(Error::InvalidArgument(format!("A is not {n}x{n}")));
    }
    if reps < 2 {
        return Err(Error::InsufficientSamples("need at least two repetitions".into()));
    }
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for _ in 0..reps {
        x.iter_mut().for_each(|t| *t = entries.sample(&mut rng));
        let mut form = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            form += x[i] * row;
        }
        let r = form - trace;
        let r2 = r * r;
        s1 += r;
        s2 += r2;
        s4 += r2 * r2;
    }
    let k = reps as f64;
    let second = s2 / k;
    let fourth = s4 / k;
    let var_of_sq = (fourth - second * second) * k / (k - 1.0);
    Ok(QuadraticFormMoments {
        reps,
        mean: s1 / k,
        second,
        second_se: (var_of_sq.max(0.0) / k).sqrt(),
        fourth,
        exact_variance: quadratic_form_variance(a, n, entries.moments().nu4),
    })
}

/// `|tr(((B - zI)⁻¹ - (B + τqqᵀ - zI)⁻¹) A)|` for real symmetric `B`.
pub fn rank_one_perturbation_gap(
    b: &[f64],
    q: &[f64],
    tau: f64,
    a: &[f64],
    n: usize,
    z: UpperHalfPoint,
) -> Result<f64> {
    if b.len() != n * n || a.len() != n * n || q.len() != n {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let mut perturbed = b.to_vec();
    for i in 0..n {
        for j in 0..n {
            perturbed[i * n + j] += tau * q[i] * q[j];
        }
    }
    let g0 = ComplexLu::shifted(b, n, z.z())?.inverse();
    let g1 = ComplexLu::shifted(&perturbed, n, z.z())?.inverse();
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            trace += (g0[i * n + j] - g1[i * n + j]) * a[j * n + i];
        }
    }
    Ok(trace.norm())
}

/// `gap · v / ‖A‖` for the rank-one perturbation bound; at most 1.
pub fn rank_one_gap_ratio(b: &[f64], q: &[f64], tau: f64, a: &[f64], n: usize, z: UpperHalfPoint) -> Result<f64> {
    let norm = operator_norm(a, n)?;
    let gap = rank_one_perturbation_gap(b, q, tau, a, n, z)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(gap * z.v() / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_distribution, sample_wigner, EntryKind, WignerSpec};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z(u: f64, v: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(u, v).unwrap()
    }

    #[test]
    fn stieltjes_of_small_spectra() {
        let s = Spectrum::from_values(vec![0.0], 0);
        assert_abs_diff_eq!((empirical_stieltjes(&s, z(0.0, 1.0)) - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        let s = Spectrum::from_values(vec![-1.0, 1.0], 0);
        assert_abs_diff_eq!((empirical_stieltjes(&s, z(0.0, 1.0)) - c(0.0, 0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn stieltjes_tail_matches_minus_inverse_z() {
        let m = sample_wigner(&WignerSpec::gaussian(20, 3)).unwrap();
        let s = crate::spectra::eigenvalues(&m).unwrap();
        let p = z(0.3, 100.0);
        let sn = empirical_stieltjes(&s, p);
        let second_moment: f64 = s.eigenvalues().iter().map(|x| x * x).sum::<f64>() / 20.0;
        let mean: f64 = s.eigenvalues().iter().sum::<f64>() / 20.0;
        // s_n + 1/z = -m1/z² - m2/z³ + ...
        let zc = p.z();
        assert!((sn + 1.0 / zc + mean / (zc * zc)).norm() <= 2.0 * second_moment / p.v().powi(3));
    }

    #[test]
    fn trace_route_matches_small_cases() {
        let zero = SymmetricMatrix::from_dense(&[0.0; 4], 2, 0).unwrap();
        assert_abs_diff_eq!((resolvent_trace(&zero, z(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        let one = SymmetricMatrix::from_dense(&[0.7], 1, 0).unwrap();
        let p = z(0.2, 0.3);
        let expected = 1.0 / (0.7 - p.z());
        assert_abs_diff_eq!((resolvent_trace(&one, p).unwrap() - expected).norm(), 0.0, epsilon = 1e-15);
        let s = Spectrum::from_values(vec![0.7], 0);
        assert_abs_diff_eq!((empirical_stieltjes(&s, p) - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_route_matches_eigenvalue_route() {
        let m = sample_wigner(&WignerSpec::gaussian(16, 11)).unwrap();
        let s = crate::spectra::eigenvalues(&m).unwrap();
        for p in [z(0.0, 0.1), z(1.5, 0.5), z(-2.5, 1.0)] {
            let a = resolvent_trace(&m, p).unwrap();
            let b = empirical_stieltjes(&s, p);
            assert!((a - b).norm() <= 1e-8);
        }
    }

    #[test]
    fn one_by_one_leave_one_out() {
        let m = SymmetricMatrix::from_dense(&[0.4], 1, 0).unwrap();
        let p = z(0.1, 0.5);
        let d = leave_one_out(&m, p, 0, c(0.0, 0.5)).unwrap();
        assert_abs_diff_eq!((d.beta - 1.0 / (0.4 - p.z())).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(d.gamma, c(0.0, 0.0));
        assert!(d.schur_residual() < 1e-15);
    }

    #[test]
    fn diagonal_matrix_has_gamma_equal_minus_trace() {
        let n = 4;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = 0.25 * i as f64 - 0.4;
        }
        let m = SymmetricMatrix::from_dense(&dense, n, 0).unwrap();
        let p = z(0.2, 0.3);
        for i in 0..n {
            let d = leave_one_out(&m, p, i, c(0.0, 0.5)).unwrap();
            assert_eq!(d.gamma, -d.trace_minor);
        }
    }

    #[test]
    fn leave_one_out_identities_on_a_sample() {
        let m = sample_wigner(&WignerSpec::gaussian(32, 5)).unwrap();
        let p = z(0.4, 0.2);
        let es = crate::law::sc_stieltjes(p.z());
        let rows: Vec<_> = (0..32).map(|i| leave_one_out(&m, p, i, es).unwrap()).collect();
        let mean_beta: Complex64 = rows.iter().map(|r| r.beta).sum::<Complex64>() / 32.0;
        assert!((mean_beta - rows[0].s_n).norm() <= 1e-10);
        for r in &rows {
            assert!(r.schur_residual() <= 1e-10);
            assert!(r.eps_identity_residual() <= 1e-10);
            assert!(r.beta_expansion_residual() <= 1e-10);
            assert!(r.beta_within_bound());
            assert!(r.xi_within_bound());
        }
    }

    #[test]
    fn batch_route_matches_direct_route() {
        let m = sample_wigner(&WignerSpec::gaussian(16, 8)).unwrap();
        let p = z(-0.7, 0.15);
        let es = c(0.1, 0.8);
        let batch = leave_one_out_all(&m, p, es).unwrap();
        for (i, b) in batch.iter().enumerate() {
            let d = leave_one_out(&m, p, i, es).unwrap();
            for (x, y) in [
                (b.beta, d.beta),
                (b.gamma, d.gamma),
                (b.gamma_hat, d.gamma_hat),
                (b.xi, d.xi),
                (b.eps, d.eps),
            ] {
                assert!((x - y).norm() <= 1e-8 * (1.0 + y.norm()), "index {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn quadratic_form_of_zero_matrix_vanishes() {
        let g = make_distribution(EntryKind::Gaussian).unwrap();
        let q = quadratic_form_residual(&[0.0; 9], 3, &g, 100, 1).unwrap();
        assert_eq!(q.second, 0.0);
        assert_eq!(q.exact_variance, 0.0);
        assert_eq!(q.z_score(), 0.0);
    }

    #[test]
    fn identity_quadratic_form_is_chi_square() {
        let n = 5;
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        assert_eq!(quadratic_form_variance(&eye, n, 3.0), 2.0 * n as f64);
        let g = make_distribution(EntryKind::Gaussian).unwrap();
        let q = quadratic_form_residual(&eye, n, &g, 50_000, 2).unwrap();
        assert!(q.z_score() < 5.0, "{q:?}");
    }

    #[test]
    fn rank_one_scalar_case() {
        let gap = rank_one_perturbation_gap(&[0.0], &[1.0], 1.0, &[1.0], 1, z(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(gap, 0.5f64.sqrt(), epsilon = 1e-15);
        let none = rank_one_perturbation_gap(&[0.3, 0.1, 0.1, -0.2], &[1.0, 2.0], 0.0, &[1.0, 0.0, 0.0, 1.0], 2, z(0.0, 0.5))
            .unwrap();
        assert_eq!(none, 0.0);
    }
}
