//! Symmetric eigenvalues, empirical spectral distributions and Kolmogorov
//! distances.
//!
//! Eigenvalues are obtained by Householder reduction to tridiagonal form
//! followed by the implicit QL iteration with Wilkinson shifts. Only
//! eigenvalues are computed.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::SymmetricMatrix;
use crate::law::SemicircleLaw;
use crate::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 50;

/// Sorted eigenvalues of one sampled matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    seed: u64,
}

impl Spectrum {
    /// Builds a spectrum from arbitrary-order values.
    pub fn from_values(mut eigenvalues: Vec<f64>, seed: u64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self { eigenvalues, seed }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes one eigenvalue per row after a `# n=..., seed=...` header line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let write = |w: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
            writeln!(w, "# n={}, seed={}", self.len(), self.seed)?;
            writeln!(w, "eigenvalue")?;
            for x in &self.eigenvalues {
                writeln!(w, "{x}")?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            reason,
        };
        let mut seed = None;
        let mut values = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                for field in meta.split(',') {
                    if let Some(s) = field.trim().strip_prefix("seed=") {
                        seed = Some(s.parse::<u64>().map_err(|e| parse_err(e.to_string()))?);
                    }
                }
            } else if line.is_empty() || line == "eigenvalue" {
                continue;
            } else {
                values.push(line.parse::<f64>().map_err(|e| parse_err(format!("{line:?}: {e}")))?);
            }
        }
        let seed = seed.ok_or_else(|| parse_err("missing seed header".into()))?;
        Ok(Self::from_values(values, seed))
    }
}

/// Right-continuous step distribution function with merged jump points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    points: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepCdf {
    /// Equal mass on each of the given values; ties are merged.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("step CDF needs at least one point".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let total = sorted.len() as f64;
        let mut points = Vec::with_capacity(sorted.len());
        let mut cumulative = Vec::with_capacity(sorted.len());
        for (k, &x) in sorted.iter().enumerate() {
            let mass = (k + 1) as f64 / total;
            if points.last() == Some(&x) {
                *cumulative.last_mut().expect("parallel vectors") = mass;
            } else {
                points.push(x);
                cumulative.push(mass);
            }
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Mass of the jump at `points()[k]`.
    pub fn mass(&self, k: usize) -> f64 {
        if k == 0 {
            self.cumulative[0]
        } else {
            self.cumulative[k] - self.cumulative[k - 1]
        }
    }

    /// `F(x)`, counting jumps at `x` itself.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&p| p <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&p| p < x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }
}

/// Empirical spectral distribution: mass `1/n` at each eigenvalue.
pub fn esd(spectrum: &Spectrum) -> Result<StepCdf> {
    StepCdf::from_samples(spectrum.eigenvalues())
}

pub fn esd_eval(f: &StepCdf, x: f64) -> f64 {
    f.eval(x)
}

/// Pooled step CDF of several spectra, mass `1/(R n)` per eigenvalue.
pub fn mean_esd(spectra: &[Spectrum]) -> Result<StepCdf> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::InvalidArgument("mean ESD of an empty list".into()))?;
    let n = first.len();
    if spectra.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("spectra in a mean ESD must share n".into()));
    }
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.eigenvalues().iter().copied()).collect();
    StepCdf::from_samples(&pooled)
}

/// `sup_x |F(x) - G(x)|` for a step function `F` and continuous `G`.
///
/// Between jumps `F` is constant and `G` monotone, so the supremum is
/// attained at a jump point, either from the left or the right.
pub fn kolmogorov_distance_to<G: Fn(f64) -> f64>(f: &StepCdf, g: G) -> f64 {
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for (&x, &above) in f.points.iter().zip(&f.cumulative) {
        let gx = g(x);
        worst = worst.max((above - gx).abs()).max((gx - below).abs());
        below = above;
    }
    worst
}

pub fn kolmogorov_distance(f: &StepCdf, law: &SemicircleLaw) -> f64 {
    kolmogorov_distance_to(f, |x| law.cdf(x))
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// Returns `(diagonal, off_diagonal)` with `off_diagonal[k]` coupling rows
/// `k` and `k + 1`. The tridiagonal matrix is orthogonally similar to the
/// input.
pub fn tridiagonalize(m: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n();
    let mut a = m.to_dense();
    tridiagonalize_dense(&mut a, n)
}

fn tridiagonalize_dense(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    if n == 0 {
        return (d, e);
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let x = &a[k * n + k + 1..(k + 1) * n];
        let m = x.len();
        let head = x[0];
        let tail_sq: f64 = x[1..].iter().map(|t| t * t).sum();
        if tail_sq == 0.0 {
            e[k] = head;
            continue;
        }
        let norm = (head * head + tail_sq).sqrt();
        let alpha = if head > 0.0 { -norm } else { norm };
        let v = &mut v[..m];
        v.copy_from_slice(x);
        v[0] = head - alpha;
        let vtv = v[0] * v[0] + tail_sq;
        let tau = 2.0 / vtv;

        // p = tau * A_sub v, then w = p - (tau/2)(pᵀv) v
        let w = &mut w[..m];
        let base = (k + 1) * n + (k + 1);
        for (r, wr) in w.iter_mut().enumerate() {
            let row = &a[base + r * n..base + r * n + m];
            *wr = tau * row.iter().zip(v.iter()).map(|(p, q)| p * q).sum::<f64>();
        }
        let ptv: f64 = w.iter().zip(v.iter()).map(|(p, q)| p * q).sum();
        let kk = 0.5 * tau * ptv;
        for (wr, vr) in w.iter_mut().zip(v.iter()) {
            *wr -= kk * vr;
        }
        for r in 0..m {
            let (vr, wr) = (v[r], w[r]);
            let row = &mut a[base + r * n..base + r * n + m];
            for ((entry, vc), wc) in row.iter_mut().zip(v.iter()).zip(w.iter()) {
                *entry -= vr * wc + wr * vc;
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 2) * n + n - 1];
    }
    d[n - 1] = a[(n - 1) * n + n - 1];
    (d, e)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. Returned in ascending order.
pub fn tridiagonal_eigenvalues(diagonal: &[f64], off_diagonal: &[f64]) -> Result<Vec<f64>> {
    let n = diagonal.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off_diagonal.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "off-diagonal length {} does not match diagonal length {n}",
            off_diagonal.len()
        )));
    }
    let mut d = diagonal.to_vec();
    let mut e = off_diagonal.to_vec();
    e.push(0.0);
    let eps = f64::EPSILON;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iterations == MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations,
                });
            }
            iterations += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<Spectrum> {
    let (d, e) = tridiagonalize(m);
    let values = tridiagonal_eigenvalues(&d, &e)?;
    Ok(Spectrum {
        eigenvalues: values,
        seed: m.seed(),
    })
}

/// Eigenvalues of a dense symmetric matrix stored row-major.
pub fn dense_eigenvalues(dense: &[f64], n: usize) -> Result<Vec<f64>> {
    if dense.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "dense buffer of length {} is not {n}x{n}",
            dense.len()
        )));
    }
    let mut a = dense.to_vec();
    let (d, e) = tridiagonalize_dense(&mut a, n);
    tridiagonal_eigenvalues(&d, &e)
}
