//! Small dense linear algebra helpers: complex LU with partial pivoting and
//! a few real matrix utilities.

use num_complex::Complex64;

use crate::spectra::dense_eigenvalues;
use crate::{Error, Result};

/// LU factorization `P A = L U` of a dense complex matrix (row-major).
#[derive(Debug, Clone)]
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl ComplexLu {
    pub fn factor(mut a: Vec<Complex64>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidArgument(format!("buffer is not {n}x{n}")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|r| (r, a[r * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs == 0.0 || !pivot_abs.is_finite() {
                return Err(Error::Singular(k));
            }
            if pivot_row != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let inv = 1.0 / a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let pivot = &top[k * n..(k + 1) * n];
            for row in bottom.chunks_exact_mut(n) {
                let factor = row[k] * inv;
                row[k] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (x, p) in row[k + 1..].iter_mut().zip(&pivot[k + 1..]) {
                    *x -= factor * p;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    /// Factors `M - zI` for a real symmetric dense `M`.
    pub fn shifted(dense: &[f64], n: usize, z: Complex64) -> Result<Self> {
        let mut a: Vec<Complex64> = dense.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for i in 0..n {
            a[i * n + i] -= z;
        }
        Self::factor(a, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Full inverse, row-major.
    pub fn inverse(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            e[c] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            for (r, x) in col.into_iter().enumerate() {
                inv[r * n + c] = x;
            }
        }
        inv
    }

    /// Trace of the inverse.
    pub fn inverse_trace(&self) -> Complex64 {
        let n = self.n;
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut total = Complex64::new(0.0, 0.0);
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            e[c] = Complex64::new(1.0, 0.0);
            total += self.solve(&e)[c];
        }
        total
    }
}

/// `C = A B` for square complex matrices.
pub fn complex_matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        let out = &mut c[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            for (o, bkj) in out.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                *o += aik * bkj;
            }
        }
    }
    c
}

/// Spectral norm of a real square matrix: `sqrt(λ_max(AᵀA))`.
pub fn operator_norm(a: &[f64], n: usize) -> Result<f64> {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum();
            gram[i * n + j] = s;
            gram[j * n + i] = s;
        }
    }
    let values = dense_eigenvalues(&gram, n)?;
    Ok(values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0)];
        let lu = ComplexLu::factor(a.clone(), 2).unwrap();
        let b = vec![c(1.0, 1.0), c(-2.0, 0.5)];
        let x = lu.solve(&b);
        for i in 0..2 {
            let ax: Complex64 = (0..2).map(|j| a[i * 2 + j] * x[j]).sum();
            assert_abs_diff_eq!((ax - b[i]).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(matches!(ComplexLu::factor(a, 2), Err(Error::Singular(1))));
    }

    #[test]
    fn inverse_of_shifted_zero_matrix() {
        let lu = ComplexLu::shifted(&[0.0; 4], 2, c(0.0, 1.0)).unwrap();
        let inv = lu.inverse();
        assert_abs_diff_eq!((inv[0] - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inv[1].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((lu.inverse_trace() - c(0.0, 2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn operator_norm_of_rotation_and_diagonal() {
        let r = [0.0, -1.0, 1.0, 0.0];
        assert_abs_diff_eq!(operator_norm(&r, 2).unwrap(), 1.0, epsilon = 1e-14);
        let d = [3.0, 0.0, 0.0, -5.0];
        assert_abs_diff_eq!(operator_norm(&d, 2).unwrap(), 5.0, epsilon = 1e-14);
        let upper = [1.0, 1.0, 0.0, 1.0];
        // singular values of [[1,1],[0,1]] are the golden ratio and its inverse
        assert_abs_diff_eq!(operator_norm(&upper, 2).unwrap(), (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-14);
    }
}
