//! The semicircle law on `[-2σ, 2σ]`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quad;
use crate::{Error, Result};

/// A point `z = u + iv` of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    u: f64,
    v: f64,
}

impl UpperHalfPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(v > 0.0) || !u.is_finite() || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "z = {u} + {v}i is not in the open upper half plane"
            )));
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }
}

/// Semicircle law with scale `σ`; density `sqrt(4σ² - x²) / (2πσ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemicircleLaw {
    sigma: f64,
}

impl Default for SemicircleLaw {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl SemicircleLaw {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Right end of the support, `2σ`.
    pub fn edge(&self) -> f64 {
        2.0 * self.sigma
    }

    pub fn pdf(&self, x: f64) -> f64 {
        sc_pdf(x, self.sigma)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        sc_cdf(x, self.sigma)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        sc_quantile(p, self.sigma)
    }

    pub fn stieltjes(&self, z: UpperHalfPoint) -> Complex64 {
        sc_stieltjes_scaled(z.z(), self.sigma)
    }

    /// `∫_{-∞}^{x} F(t) dt`, the antiderivative of the CDF that vanishes left
    /// of the support. Used for exact integrals of `|F - G|`.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        let s = self.sigma;
        if x <= -2.0 * s {
            0.0
        } else if x >= 2.0 * s {
            // ∫_{-2σ}^{2σ} F = 2σ by symmetry of F about 1/2
            2.0 * s + (x - 2.0 * s)
        } else {
            s * (unit_cdf_antiderivative(x / s) - unit_cdf_antiderivative(-2.0))
        }
    }

    /// Writes `x,pdf,cdf` rows on an equally spaced grid over the support.
    pub fn write_curve_csv(&self, path: &Path, points: usize) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let write = |w: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
            writeln!(w, "# semicircle law, sigma={}", self.sigma)?;
            writeln!(w, "x,pdf,cdf")?;
            let points = points.max(2);
            for k in 0..points {
                let x = -self.edge() + 2.0 * self.edge() * k as f64 / (points - 1) as f64;
                writeln!(w, "{x},{},{}", self.pdf(x), self.cdf(x))?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }
}

// H(x) = ∫ F₁(x) dx on [-2, 2] for the unit law.
fn unit_cdf_antiderivative(x: f64) -> f64 {
    let r = (4.0 - x * x).max(0.0).sqrt();
    0.5 * x - r * r * r / (12.0 * PI) + (x * (0.5 * x).clamp(-1.0, 1.0).asin() + r) / PI
}

/// Semicircle density; zero outside `[-2σ, 2σ]`.
pub fn sc_pdf(x: f64, sigma: f64) -> f64 {
    let r2 = 4.0 * sigma * sigma - x * x;
    if r2 <= 0.0 {
        0.0
    } else {
        r2.sqrt() / (2.0 * PI * sigma * sigma)
    }
}

/// Semicircle CDF, clamped to 0 and 1 outside the support.
pub fn sc_cdf(x: f64, sigma: f64) -> f64 {
    let t = x / sigma;
    if t <= -2.0 {
        return 0.0;
    }
    if t >= 2.0 {
        return 1.0;
    }
    let value = 0.5 + t * (4.0 - t * t).sqrt() / (4.0 * PI) + (0.5 * t).asin() / PI;
    value.clamp(0.0, 1.0)
}

/// Inverse of [`sc_cdf`] by bisection.
pub fn sc_quantile(p: f64, sigma: f64) -> f64 {
    let edge = 2.0 * sigma;
    if p <= 0.0 {
        return -edge;
    }
    if p >= 1.0 {
        return edge;
    }
    if p == 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-edge, edge);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sc_cdf(mid, sigma) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stieltjes transform of the unit semicircle law,
/// `s(z) = (-z + sqrt(z² - 4)) / 2`, on the branch with `Im s > 0`.
pub fn sc_stieltjes(z: Complex64) -> Complex64 {
    let root = (z * z - 4.0).sqrt();
    // The two roots of s² + zs + 1 = 0 multiply to 1; the admissible one has
    // modulus ≤ 1. Take the larger root from the sum that does not cancel and
    // invert it.
    let plus = -z + root;
    let minus = -z - root;
    let big = if plus.norm_sqr() >= minus.norm_sqr() { plus } else { minus };
    let s = 2.0 / big;
    if s.im > 0.0 || z.im <= 0.0 {
        s
    } else {
        // Only reachable through rounding when |s| ≈ 1; fall back on the other root.
        0.5 * big
    }
}

/// Stieltjes transform of the semicircle law with scale `σ`: `s(z/σ)/σ`.
pub fn sc_stieltjes_scaled(z: Complex64, sigma: f64) -> Complex64 {
    sc_stieltjes(z / sigma) / sigma
}

/// `|z + 2s(z)| = |sqrt(z² - 4)|` for the unit law.
pub fn self_energy_gap(z: Complex64) -> f64 {
    (z + 2.0 * sc_stieltjes(z)).norm()
}

/// Numerical value of `∫_{-16}^{16} du / sqrt(|u² - 4|)`.
///
/// The integrand has inverse square-root singularities at `u = ±2`, so the
/// range is split there and each piece integrated with tanh-sinh.
pub fn integral_bound_value() -> Result<f64> {
    Ok(integral_bound_parts()?.iter().sum())
}

/// The three pieces `[-16,-2]`, `[-2,2]`, `[2,16]` of [`integral_bound_value`].
pub fn integral_bound_parts() -> Result<[f64; 3]> {
    const TOL: f64 = 1e-13;
    // On [2, 16]: u² - 4 = (u - 2)(u + 2) with u - 2 = distance to the left end.
    let outer = quad::tanh_sinh(|u, d_left, _| 1.0 / (d_left * (u + 2.0)).sqrt(), 2.0, 16.0, TOL)?;
    let inner = quad::tanh_sinh(|_, d_left, d_right| 1.0 / (d_left * d_right).sqrt(), -2.0, 2.0, TOL)?;
    // The left piece mirrors the right one; integrate it independently anyway.
    let left = quad::tanh_sinh(|u, _, d_right| 1.0 / (d_right * (2.0 - u)).sqrt(), -16.0, -2.0, TOL)?;
    Ok([left.value, inner.value, outer.value])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pdf_reference_values() {
        assert_abs_diff_eq!(sc_pdf(0.0, 1.0), 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(sc_pdf(1.0, 1.0), 3f64.sqrt() / (2.0 * PI), epsilon = 1e-15);
        assert_eq!(sc_pdf(2.0, 1.0), 0.0);
        assert_eq!(sc_pdf(-3.0, 1.5), 0.0);
        assert_eq!(sc_pdf(5.0, 1.0), 0.0);
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(sc_cdf(0.0, 1.0), 0.5);
        assert_eq!(sc_cdf(0.0, 3.7), 0.5);
        assert_eq!(sc_cdf(2.0, 1.0), 1.0);
        assert_eq!(sc_cdf(-2.0, 1.0), 0.0);
        assert_eq!(sc_cdf(-10.0, 1.0), 0.0);
        assert_abs_diff_eq!(sc_cdf(1.0, 1.0), 0.804_498_9, epsilon = 1e-7);
        assert_abs_diff_eq!(sc_cdf(-1.0, 1.0), 0.195_501_1, epsilon = 1e-7);
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(sc_quantile(0.5, 1.0), 0.0);
        assert_eq!(sc_quantile(1.0, 1.0), 2.0);
        assert_eq!(sc_quantile(0.0, 2.0), -4.0);
        assert_abs_diff_eq!(sc_quantile(sc_cdf(1.0, 1.0), 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sc_quantile(0.804_498, 1.0), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn stieltjes_reference_values() {
        let s = sc_stieltjes(Complex64::new(0.0, 1.0));
        assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-15);

        let s = sc_stieltjes(Complex64::new(0.0, 10.0));
        // s = it with t² + 10t - 1 = 0
        assert_abs_diff_eq!(s.im, (104f64.sqrt() - 10.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, 0.099_019_5, epsilon = 1e-7);

        let s = sc_stieltjes(Complex64::new(0.5, 0.5));
        assert!(s.im > 0.0);
        assert!(s.norm() <= 1.0);
    }

    #[test]
    fn stieltjes_far_from_support_behaves_like_minus_inverse_z() {
        let z = Complex64::new(300.0, 1e-3);
        let s = sc_stieltjes(z);
        assert!(s.im > 0.0);
        assert!((s + 1.0 / z).norm() < 1e-6);
    }

    #[test]
    fn cdf_integral_matches_closed_edges() {
        let law = SemicircleLaw::new(1.3).unwrap();
        assert_eq!(law.cdf_integral(-5.0), 0.0);
        // F(x) + F(-x) = 1, so the integral over the support is 2σ
        assert_abs_diff_eq!(law.cdf_integral(2.6), 2.6, epsilon = 1e-12);
        assert_abs_diff_eq!(law.cdf_integral(4.0), 2.6 + 1.4, epsilon = 1e-12);
    }

    #[test]
    fn upper_half_point_rejects_real_axis() {
        assert!(UpperHalfPoint::new(0.0, 0.0).is_err());
        assert!(UpperHalfPoint::new(0.0, -1.0).is_err());
        assert!(UpperHalfPoint::new(f64::NAN, 1.0).is_err());
        assert!(SemicircleLaw::new(0.0).is_err());
    }

    #[test]
    fn integral_bound_pieces_have_closed_forms() {
        let [left, inner, outer] = integral_bound_parts().unwrap();
        assert_abs_diff_eq!(inner, PI, epsilon = 1e-11);
        let acosh8 = (8.0 + 63f64.sqrt()).ln();
        assert_abs_diff_eq!(outer, acosh8, epsilon = 1e-11);
        assert_abs_diff_eq!(left, acosh8, epsilon = 1e-11);
        let total = integral_bound_value().unwrap();
        assert_abs_diff_eq!(total, PI + 2.0 * acosh8, epsilon = 1e-10);
        assert!(total < 10.0);
    }
}
