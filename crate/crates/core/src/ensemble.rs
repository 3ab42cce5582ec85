//! Entry laws, truncation, and Wigner matrix sampling.
//!
//! Every law is represented through a *base* variate `b` with mean zero and
//! unit variance (standard normal, Rademacher, uniform on `[-√3, √3]`,
//! rescaled Student t, standardized two-point). A prepared entry is
//!
//! ```text
//! x = (b · 1{|b| ≤ T} - shift) / scale
//! ```
//!
//! where the indicator is only present once [`truncate_center_rescale`] has
//! fixed a level `T = n^{1/4}`. `shift` and `scale` are computed from the
//! exact moments of the truncated base variate so that entries stay i.i.d.
//! across the whole matrix.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::quad::{self, GkOptions};
use crate::{Error, Result};

/// Family of the base variate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryKind {
    Gaussian,
    Rademacher,
    Uniform,
    StudentT { df: f64 },
    /// Two atoms, the positive one carrying probability `p`.
    TwoPoint { p: f64 },
}

impl EntryKind {
    fn validate(&self) -> Result<()> {
        match *self {
            EntryKind::StudentT { df } if !(df > 2.0) || !df.is_finite() => Err(Error::InvalidDistribution(
                format!("student_t requires df > 2 for a finite variance, got df = {df}"),
            )),
            EntryKind::TwoPoint { p } if !(p > 0.0 && p < 1.0) => Err(Error::InvalidDistribution(format!(
                "two_point requires 0 < p < 1, got p = {p}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            EntryKind::Gaussian => "gaussian".into(),
            EntryKind::Rademacher => "rademacher".into(),
            EntryKind::Uniform => "uniform".into(),
            EntryKind::StudentT { df } => format!("student_t({df})"),
            EntryKind::TwoPoint { p } => format!("two_point({p})"),
        }
    }

    fn two_point_atoms(p: f64) -> (f64, f64) {
        (((1.0 - p) / p).sqrt(), -(p / (1.0 - p)).sqrt())
    }

    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryKind::Gaussian => StandardNormal.sample(rng),
            EntryKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryKind::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            EntryKind::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
            EntryKind::TwoPoint { p } => {
                let (hi, lo) = Self::two_point_atoms(p);
                if rng.random::<f64>() < p {
                    hi
                } else {
                    lo
                }
            }
        }
    }

    /// Density of the base variate, for kinds that have one.
    pub fn base_density(&self, x: f64) -> Option<f64> {
        match *self {
            EntryKind::Gaussian => Some((-0.5 * x * x).exp() / (2.0 * PI).sqrt()),
            EntryKind::Uniform => {
                let r = 3f64.sqrt();
                Some(if x.abs() <= r { 0.5 / r } else { 0.0 })
            }
            EntryKind::StudentT { df } => {
                let c = (df / (df - 2.0)).sqrt();
                Some(c * student_t_density(c * x, df))
            }
            EntryKind::Rademacher | EntryKind::TwoPoint { .. } => None,
        }
    }

    /// `E[b^k]` of the untruncated base variate for `k = 0..=6`.
    fn base_moments(&self) -> [f64; 7] {
        match *self {
            EntryKind::Gaussian => [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0],
            EntryKind::Rademacher => [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            EntryKind::Uniform => [1.0, 0.0, 1.0, 0.0, 9.0 / 5.0, 0.0, 27.0 / 7.0],
            EntryKind::StudentT { df } => {
                let inf = f64::INFINITY;
                let third = if df > 3.0 { 0.0 } else { inf };
                let fourth = if df > 4.0 { 3.0 * (df - 2.0) / (df - 4.0) } else { inf };
                let fifth = if df > 5.0 { 0.0 } else { inf };
                let sixth = if df > 6.0 {
                    15.0 * (df - 2.0) * (df - 2.0) / ((df - 4.0) * (df - 6.0))
                } else {
                    inf
                };
                [1.0, 0.0, 1.0, third, fourth, fifth, sixth]
            }
            EntryKind::TwoPoint { p } => {
                let (hi, lo) = Self::two_point_atoms(p);
                let mut m = [0.0; 7];
                for (k, slot) in m.iter_mut().enumerate() {
                    *slot = p * hi.powi(k as i32) + (1.0 - p) * lo.powi(k as i32);
                }
                m
            }
        }
    }

    /// `E[b^k 1{|b| ≤ level}]` for `k = 0..=6`; slot 0 is the retained mass.
    fn truncated_moments(&self, level: f64) -> Result<[f64; 7]> {
        let mut m = [0.0; 7];
        match *self {
            EntryKind::Rademacher => {
                if level >= 1.0 {
                    for k in (0..7).step_by(2) {
                        m[k] = 1.0;
                    }
                }
            }
            EntryKind::TwoPoint { p } => {
                let (hi, lo) = Self::two_point_atoms(p);
                for (atom, weight) in [(hi, p), (lo, 1.0 - p)] {
                    if atom.abs() <= level {
                        for (k, slot) in m.iter_mut().enumerate() {
                            *slot += weight * atom.powi(k as i32);
                        }
                    }
                }
            }
            EntryKind::Uniform => {
                let r = 3f64.sqrt();
                let c = level.min(r);
                for k in (0..7).step_by(2) {
                    m[k] = c.powi(k as i32 + 1) / ((k as f64 + 1.0) * r);
                }
            }
            EntryKind::Gaussian | EntryKind::StudentT { .. } => {
                // Symmetric densities: odd moments vanish, even ones are twice
                // the integral over [0, level].
                let opts = GkOptions {
                    abs_tol: 1e-15,
                    rel_tol: 1e-13,
                    initial_pieces: 8,
                    ..Default::default()
                };
                for k in (0..7).step_by(2) {
                    let density = |x: f64| self.base_density(x).expect("continuous kind");
                    let e = quad::gauss_kronrod(|x| x.powi(k as i32) * density(x), 0.0, level, opts)?;
                    m[k] = 2.0 * e.value;
                }
            }
        }
        Ok(m)
    }
}

fn student_t_density(t: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let log_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln();
    (log_norm - 0.5 * (df + 1.0) * (1.0 + t * t / df).ln()).exp()
}

/// Moments of an entry law. `nu3` is the signed third moment; the others are
/// even. `+∞` marks a moment that does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
    pub nu6: f64,
}

/// A zero-mean entry law together with its moments and truncation metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryDistribution {
    kind: EntryKind,
    shift: f64,
    scale: f64,
    truncation_level: Option<f64>,
    prepared_for: Option<usize>,
    moments: Moments,
}

/// Mean and variance of `b · 1{|b| ≤ level}` for a base variate `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationStats {
    pub level: f64,
    /// `P(|b| ≤ level)`.
    pub retained: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Builds a mean-zero, unit-variance law of the given kind.
pub fn make_distribution(kind: EntryKind) -> Result<EntryDistribution> {
    kind.validate()?;
    let raw = kind.base_moments();
    Ok(EntryDistribution {
        kind,
        shift: 0.0,
        scale: 1.0,
        truncation_level: None,
        prepared_for: None,
        moments: Moments {
            mean: 0.0,
            nu2: raw[2],
            nu3: raw[3],
            nu4: raw[4],
            nu6: raw[6],
        },
    })
}

impl EntryDistribution {
    pub fn kind(&self) -> EntryKind {
        self.kind
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn variance(&self) -> f64 {
        self.moments.nu2
    }

    pub fn truncation_level(&self) -> Option<f64> {
        self.truncation_level
    }

    /// Matrix dimension the truncation level was prepared for.
    pub fn prepared_for(&self) -> Option<usize> {
        self.prepared_for
    }

    pub fn has_finite_sixth_moment(&self) -> bool {
        self.moments.nu6.is_finite()
    }

    /// The same law rescaled to the given variance.
    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "variance must be positive, got {variance}"
            )));
        }
        let factor = (variance / self.moments.nu2).sqrt();
        let m = self.moments;
        Ok(Self {
            scale: self.scale / factor,
            moments: Moments {
                mean: m.mean * factor,
                nu2: variance,
                nu3: m.nu3 * factor.powi(3),
                nu4: m.nu4 * factor.powi(4),
                nu6: m.nu6 * factor.powi(6),
            },
            ..*self
        })
    }

    /// Largest attainable `|x|`, if the law is bounded.
    pub fn support_bound(&self) -> Option<f64> {
        let base = match (self.truncation_level, self.kind) {
            (Some(level), _) => level,
            (None, EntryKind::Rademacher) => 1.0,
            (None, EntryKind::Uniform) => 3f64.sqrt(),
            (None, EntryKind::TwoPoint { p }) => {
                let (hi, lo) = EntryKind::two_point_atoms(p);
                hi.abs().max(lo.abs())
            }
            (None, _) => return None,
        };
        Some((base + self.shift.abs()) / self.scale)
    }

    /// Draws one entry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut b = self.kind.sample_base(rng);
        if let Some(level) = self.truncation_level {
            if b.abs() > level {
                b = 0.0;
            }
        }
        (b - self.shift) / self.scale
    }
}

/// Mean and variance of the base variate zeroed outside `[-level, level]`.
pub fn truncation_stats(kind: EntryKind, level: f64) -> Result<TruncationStats> {
    kind.validate()?;
    let m = kind.truncated_moments(level)?;
    Ok(TruncationStats {
        level,
        retained: m[0],
        mean: m[1],
        variance: m[2] - m[1] * m[1],
    })
}

/// Truncates the base variate at `n^{1/4}`, recentres it and rescales it back
/// to the variance of `dist`.
pub fn truncate_center_rescale(dist: &EntryDistribution, n: usize) -> Result<EntryDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation needs n >= 1".into()));
    }
    truncate_at_level(dist, (n as f64).powf(0.25), n)
}

fn truncate_at_level(dist: &EntryDistribution, level: f64, n: usize) -> Result<EntryDistribution> {
    let raw = dist.kind.truncated_moments(level)?;
    let mean = raw[1];
    let variance = raw[2] - mean * mean;
    if !(variance > 1e-300) {
        return Err(Error::DegenerateTruncation { level });
    }
    let s = variance.sqrt();
    // Central moments of the truncated variate; raw[0] is the retained mass,
    // but b·1{..} equals 0 off the event, so E[(b·1)^0] = 1.
    let mut powers = raw;
    powers[0] = 1.0;
    let central = |k: usize| -> f64 {
        (0..=k)
            .map(|j| binomial(k, j) * powers[j] * (-mean).powi((k - j) as i32))
            .sum()
    };
    let target_sd = dist.moments.nu2.sqrt();
    let unit = |k: usize| central(k) / s.powi(k as i32) * target_sd.powi(k as i32);
    Ok(EntryDistribution {
        kind: dist.kind,
        shift: mean,
        scale: s / target_sd,
        truncation_level: Some(level),
        prepared_for: Some(n),
        moments: Moments {
            mean: 0.0,
            nu2: dist.moments.nu2,
            nu3: unit(3),
            nu4: unit(4),
            nu6: unit(6),
        },
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Parameters of a scaled real symmetric Wigner matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerSpec {
    pub n: usize,
    pub offdiag: EntryDistribution,
    pub diag: EntryDistribution,
    /// Standard deviation of the diagonal entries.
    pub sigma: f64,
    pub seed: u64,
}

impl WignerSpec {
    /// Checks the variance conventions: off-diagonal variance 1, diagonal σ².
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidSpec(format!("sigma must be positive, got {}", self.sigma)));
        }
        if (self.offdiag.variance() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "off-diagonal variance must be 1, got {}",
                self.offdiag.variance()
            )));
        }
        if (self.diag.variance() - self.sigma * self.sigma).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "diagonal variance must be sigma^2 = {}, got {}",
                self.sigma * self.sigma,
                self.diag.variance()
            )));
        }
        Ok(())
    }

    /// Gaussian entries with unit diagonal variance.
    pub fn gaussian(n: usize, seed: u64) -> Self {
        let g = make_distribution(EntryKind::Gaussian).expect("gaussian is always valid");
        Self {
            n,
            offdiag: g,
            diag: g,
            sigma: 1.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// Packed upper triangle of `W_n = n^{-1/2} (x_ij)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
    seed: u64,
}

impl SymmetricMatrix {
    fn offset(n: usize, i: usize) -> usize {
        i * (2 * n - i + 1) / 2
    }

    /// Builds from a dense row-major buffer, which must be exactly symmetric.
    pub fn from_dense(dense: &[f64], n: usize, seed: u64) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::InvalidArgument(format!("buffer is not {n}x{n}")));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                if dense[i * n + j] != dense[j * n + i] {
                    return Err(Error::InvalidArgument(format!("entry ({i},{j}) breaks symmetry")));
                }
                upper.push(dense[i * n + j]);
            }
        }
        Ok(Self { n, upper, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[Self::offset(self.n, i) + (j - i)]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                dense[i * n + j] = self.upper[k];
                dense[j * n + i] = self.upper[k];
                k += 1;
            }
        }
        dense
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut k = 0;
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let x = self.upper[k];
                total += if i == j { x * x } else { 2.0 * x * x };
                k += 1;
            }
        }
        total
    }

    /// Dense principal minor with row and column `skip` removed.
    pub fn minor_dense(&self, skip: usize) -> Vec<f64> {
        let idx: Vec<usize> = (0..self.n).filter(|&k| k != skip).collect();
        let m = idx.len();
        let mut out = vec![0.0; m * m];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out[r * m + c] = self.get(i, j);
            }
        }
        out
    }
}

/// Samples `W_n`: entries on and above the diagonal independent, everything
/// multiplied by `n^{-1/2}`. Deterministic in `(spec, spec.seed)`.
pub fn sample_wigner(spec: &WignerSpec) -> Result<SymmetricMatrix> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        upper.push(spec.diag.sample(&mut rng) * scale);
        for _ in i + 1..n {
            upper.push(spec.offdiag.sample(&mut rng) * scale);
        }
    }
    Ok(SymmetricMatrix {
        n,
        upper,
        seed: spec.seed,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replica `replica` at dimension `n` derived from a master seed.
/// Independent of scheduling, so replicas may run in any order.
pub fn replica_seed(master: u64, n: usize, replica: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n as u64) ^ replica as u64)
}
