//! Executable forms of the inequalities used in the rate proof.
//!
//! Every checker returns a [`BoundReport`]: a table of `lhs ≤ rhs` rows plus
//! summary numbers. The Monte Carlo bounds only promise "some constant", so
//! the rows compare a scaled statistic against a stability threshold
//! (`max ≤ 10 × median` over a grid, and a bounded drift across `n`). Those
//! thresholds are policy choices.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::law::{SemicircleLaw, UpperHalfPoint};
use crate::quad::{gauss_kronrod, GkOptions};
use crate::resolvent::LeaveOneOutDiag;
use crate::spectra::{kolmogorov_distance, StepCdf};
use crate::{Error, Result};

/// Default `C₀` in `v₀ = C₀ n^{-1/2}`.
pub const DEFAULT_C0: f64 = 2.0;
/// Within-grid stability: `max ≤ GRID_SPREAD × median`.
pub const GRID_SPREAD: f64 = 10.0;
/// Cross-`n` drift allowed for the variance and moment statistics.
pub const CROSS_N_FACTOR: f64 = 2.0;
/// Cross-`n` drift allowed for the β exceedance frequency.
pub const BETA_DRIFT_FACTOR: f64 = 4.0;
/// Minimum replica count for variance-type estimates.
pub const MIN_REPLICAS: usize = 50;
/// Minimum replica count for exceedance frequencies.
pub const MIN_BETA_REPLICAS: usize = 100;

/// Constants of the smoothing inequality, validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaiConstants {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub v: f64,
    pub rho: f64,
    pub zeta: f64,
}

impl BaiConstants {
    /// `1 / (π (1 - ζ) (2ρ - 1))`.
    pub fn prefactor(&self) -> f64 {
        1.0 / (PI * (1.0 - self.zeta) * (2.0 * self.rho - 1.0))
    }

    /// Same `A, B, ε` at a new height `v`.
    pub fn at_height(&self, v: f64) -> Result<Self> {
        validate_constants(self.a, self.b, self.eps, v)
    }
}

/// Computes `ρ = (2/π) atan ε` and `ζ = 4B / (π (A - B)(2ρ - 1))` and checks
/// `A > B > 0`, `v > 0`, `ρ > 1/2`, `ζ ∈ (0, 1)`.
pub fn validate_constants(a: f64, b: f64, eps: f64, v: f64) -> Result<BaiConstants> {
    if !(a.is_finite() && b.is_finite() && eps.is_finite() && v.is_finite()) {
        return Err(Error::InvalidConstants("constants must be finite".into()));
    }
    if !(b > 0.0 && a > b) {
        return Err(Error::InvalidConstants(format!("need A > B > 0, got A = {a}, B = {b}")));
    }
    if v <= 0.0 {
        return Err(Error::InvalidConstants(format!("need v > 0, got {v}")));
    }
    let rho = 2.0 / PI * eps.atan();
    // atan(1) rounds to exactly π/4, so ε = 1 lands on ρ = 1/2 here
    if rho <= 0.5 {
        return Err(Error::InvalidConstants(format!("rho = {rho} must exceed 1/2 (eps = {eps})")));
    }
    let zeta = 4.0 * b / (PI * (a - b) * (2.0 * rho - 1.0));
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InvalidConstants(format!("zeta = {zeta} must lie in (0, 1)")));
    }
    Ok(BaiConstants { a, b, eps, v, rho, zeta })
}

/// One `lhs ≤ rhs` comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `v ≥ C₀ n^{-1/2}`; rows outside the regime are reported, not judged.
    pub in_regime: bool,
    pub pass: bool,
}

impl BoundRow {
    fn judged(n: usize, u: Option<f64>, v: Option<f64>, lhs: f64, rhs: f64, in_regime: bool) -> Self {
        let pass = !in_regime || lhs <= rhs;
        BoundRow { n, u, v, lhs, rhs, in_regime, pass }
    }
}

/// Evaluated inequality with its rows and headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub constants: BTreeMap<String, f64>,
    pub rows: Vec<BoundRow>,
    pub summary: BTreeMap<String, f64>,
    pub pass: bool,
}

impl BoundReport {
    fn new(name: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            constants: BTreeMap::new(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            pass: true,
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.rows.iter().all(|r| r.pass);
        self
    }

    /// Concatenates reports under one name; passes when every part passes.
    pub fn combine(name: &str, parts: &[BoundReport]) -> Self {
        let mut out = BoundReport::new(name);
        for p in parts {
            out.rows.extend(p.rows.iter().copied());
            for (k, v) in &p.constants {
                out.constants.insert(format!("{}.{k}", p.name), *v);
            }
            for (k, v) in &p.summary {
                out.summary.insert(format!("{}.{k}", p.name), *v);
            }
        }
        out.pass = parts.iter().all(|p| p.pass);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// CSV with one line per row: `name,n,u,v,lhs,rhs,in_regime,pass`.
    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "name,n,u,v,lhs,rhs,in_regime,pass")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.name,
                r.n,
                r.u.map_or(String::new(), |x| x.to_string()),
                r.v.map_or(String::new(), |x| x.to_string()),
                r.lhs, r.rhs, r.in_regime, r.pass
            )?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_rows(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Largest `lhs` among in-regime rows.
    pub fn max_lhs(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.in_regime)
            .map(|r| r.lhs)
            .fold(0.0, f64::max)
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// The three bracketed terms of the smoothing inequality, before the prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaiTerms {
    pub stieltjes_integral: f64,
    pub stieltjes_integral_error: f64,
    pub tail: f64,
    pub smoothness: f64,
}

/// `s_F(z) = Σ_k m_k / (x_k - z)` for a step distribution.
pub fn step_stieltjes(f: &StepCdf, z: Complex64) -> Complex64 {
    f.points()
        .iter()
        .enumerate()
        .map(|(k, &x)| f.mass(k) / (x - z))
        .sum()
}

/// `∫_a^b |c - G(x)| dx` for constant `c` and the monotone law `G`.
fn abs_gap_integral(c: f64, a: f64, b: f64, law: &SemicircleLaw) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = |x: f64| law.cdf_integral(x);
    let below = |a: f64, b: f64| c * (b - a) - (h(b) - h(a)); // ∫ (c - G), G ≤ c
    if law.cdf(b) <= c {
        return below(a, b).max(0.0);
    }
    if law.cdf(a) >= c {
        return (-below(a, b)).max(0.0);
    }
    let x = law.quantile(c).clamp(a, b);
    below(a, x).max(0.0) + (-below(x, b)).max(0.0)
}

/// `∫_{|x|>B} |F - G| dx`, exact for step `F` and the semicircle `G`.
pub fn tail_integral(f: &StepCdf, law: &SemicircleLaw, b: f64) -> f64 {
    let edge = law.edge();
    let points = f.points();
    let mut total = 0.0;

    // right tail: breakpoints in (B, max(last point, edge)]
    let right_end = points.last().copied().unwrap_or(b).max(edge);
    if right_end > b {
        let mut cuts: Vec<f64> = points.iter().copied().filter(|&x| x > b).collect();
        if edge > b {
            cuts.push(edge);
        }
        cuts.push(b);
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        for w in cuts.windows(2) {
            total += abs_gap_integral(f.eval(w[0]), w[0], w[1], law);
        }
    }

    // left tail: breakpoints in [min(first point, -edge), -B)
    let left_end = points.first().copied().unwrap_or(-b).min(-edge);
    if left_end < -b {
        let mut cuts: Vec<f64> = points.iter().copied().filter(|&x| x < -b).collect();
        if -edge < -b {
            cuts.push(-edge);
        }
        cuts.push(-b);
        cuts.push(left_end);
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        for w in cuts.windows(2) {
            total += abs_gap_integral(f.eval(w[0]), w[0], w[1], law);
        }
    }
    total
}

/// Upper bound on `sup_x ∫_{|u|≤h} |G(x+u) - G(x)| du` for the semicircle.
///
/// For monotone `G` the inner integral is `Ĝ(x+h) - 2Ĝ(x) + Ĝ(x-h)` with `Ĝ`
/// the antiderivative of `G`. It is maximised on a grid of spacing at most
/// `step`, then padded by the Lipschitz constant `2h/(πσ)` times `step/2`.
pub fn smoothness_sup(law: &SemicircleLaw, h: f64, step: f64) -> f64 {
    let hh = |x: f64| law.cdf_integral(x);
    let phi = |x: f64| hh(x + h) - 2.0 * hh(x) + hh(x - h);
    let lo = -law.edge() - h;
    let hi = law.edge() + h;
    let pieces = ((hi - lo) / step).ceil().max(1.0) as usize;
    let dx = (hi - lo) / pieces as f64;
    let best = (0..=pieces).map(|k| phi(lo + dx * k as f64)).fold(0.0, f64::max);
    best + 0.5 * dx * 2.0 * h / (PI * law.sigma())
}

/// Evaluates the three terms at height `c.v`.
pub fn bai_terms(f: &StepCdf, law: &SemicircleLaw, c: &BaiConstants) -> Result<BaiTerms> {
    let v = c.v;
    let integrand = |u: f64| {
        let z = Complex64::new(u, v);
        let g = law.stieltjes(UpperHalfPoint::new(u, v).expect("v > 0"));
        (step_stieltjes(f, z) - g).norm()
    };
    // pieces no wider than v so every resonance near an atom is resolved
    let pieces = ((2.0 * c.a / v).ceil() as usize).clamp(16, 100_000);
    let opts = GkOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 50 * pieces,
        initial_pieces: pieces,
    };
    let est = gauss_kronrod(integrand, -c.a, c.a, opts)?;
    Ok(BaiTerms {
        stieltjes_integral: est.value,
        stieltjes_integral_error: est.error,
        tail: 2.0 * PI / v * tail_integral(f, law, c.b),
        smoothness: smoothness_sup(law, 2.0 * v * c.eps, v / 10.0) / v,
    })
}

/// Both sides of the smoothing inequality for `F` against the law `G`.
///
/// The left side is the exact Kolmogorov distance. The right side subtracts
/// the quadrature error estimate before comparing, so a pass is never an
/// artefact of integration error.
pub fn bai_rhs(f: &StepCdf, law: &SemicircleLaw, c: &BaiConstants) -> Result<BoundReport> {
    let terms = bai_terms(f, law, c)?;
    let pre = c.prefactor();
    let rhs = pre * (terms.stieltjes_integral + terms.tail + terms.smoothness);
    let rhs_conservative = rhs - pre * terms.stieltjes_integral_error;
    let lhs = kolmogorov_distance(f, law);

    let mut report = BoundReport::new("bai");
    for (k, v) in [
        ("A", c.a),
        ("B", c.b),
        ("eps", c.eps),
        ("v", c.v),
        ("rho", c.rho),
        ("zeta", c.zeta),
        ("prefactor", pre),
        ("sigma", law.sigma()),
    ] {
        report.constants.insert(k.into(), v);
    }
    for (k, v) in [
        ("term_stieltjes", terms.stieltjes_integral),
        ("term_stieltjes_error", terms.stieltjes_integral_error),
        ("term_tail", terms.tail),
        ("term_smoothness", terms.smoothness),
        ("lhs", lhs),
        ("rhs", rhs),
    ] {
        report.summary.insert(k.into(), v);
    }
    report.rows.push(BoundRow {
        n: f.points().len(),
        u: None,
        v: Some(c.v),
        lhs,
        rhs,
        in_regime: true,
        pass: lhs <= rhs_conservative,
    });
    Ok(report.finish())
}

/// Per-replica `s_n(z)` values over a fixed grid at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSamples {
    pub n: usize,
    pub grid: Vec<UpperHalfPoint>,
    /// `values[r][k]` is replica `r` at grid point `k`.
    pub values: Vec<Vec<Complex64>>,
}

impl StieltjesSamples {
    pub fn new(n: usize, grid: Vec<UpperHalfPoint>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if values.iter().any(|row| row.len() != grid.len()) {
            return Err(Error::InvalidArgument("every replica needs one value per grid point".into()));
        }
        Ok(StieltjesSamples { n, grid, values })
    }

    pub fn replicas(&self) -> usize {
        self.values.len()
    }

    /// Replica mean `Ê s_n` at grid point `k`.
    pub fn mean(&self, k: usize) -> Complex64 {
        self.values.iter().map(|r| r[k]).sum::<Complex64>() / self.replicas() as f64
    }

    // deviations from the replica mean, accumulated relative to the first
    // replica so that identical replicas give exactly zero
    fn deviations(&self, k: usize) -> impl Iterator<Item = Complex64> + '_ {
        let origin = self.values.first().map_or(Complex64::new(0.0, 0.0), |r| r[k]);
        let shift = self.values.iter().map(|r| r[k] - origin).sum::<Complex64>() / self.replicas() as f64;
        self.values.iter().map(move |r| r[k] - origin - shift)
    }

    /// `(1/R) Σ |s_n - Ê s_n|^p`.
    pub fn central_abs_moment(&self, k: usize, p: f64) -> f64 {
        self.deviations(k).map(|d| d.norm().powf(p)).sum::<f64>() / self.replicas() as f64
    }

    /// Unbiased `(1/(R-1)) Σ |s_n - Ê s_n|²`.
    pub fn variance(&self, k: usize) -> f64 {
        let r = self.replicas() as f64;
        self.deviations(k).map(|d| d.norm_sqr()).sum::<f64>() / (r - 1.0)
    }
}

fn check_samples(samples: &StieltjesSamples, c0: f64) -> Result<()> {
    if samples.replicas() < MIN_REPLICAS {
        return Err(Error::InsufficientSamples(format!(
            "{} replicas, need at least {MIN_REPLICAS}",
            samples.replicas()
        )));
    }
    let v0 = c0 / (samples.n as f64).sqrt();
    if let Some(z) = samples.grid.iter().find(|z| z.v() < v0) {
        return Err(Error::OutOfRegime(format!(
            "v = {} below v0 = {v0} at n = {}",
            z.v(),
            samples.n
        )));
    }
    Ok(())
}

fn grid_stability(name: &str, n: usize, grid: &[UpperHalfPoint], ratios: Vec<f64>) -> BoundReport {
    let med = median(&ratios);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let mut report = BoundReport::new(name);
    report.constants.insert("grid_spread".into(), GRID_SPREAD);
    report.summary.insert("median".into(), med);
    report.summary.insert("max".into(), max);
    for (z, r) in grid.iter().zip(ratios) {
        report.rows.push(BoundRow::judged(n, Some(z.u()), Some(z.v()), r, GRID_SPREAD * med, true));
    }
    report.finish()
}

/// `V̂ar(s_n(z)) · n |z + 2s(z)|²` per grid point, judged by
/// `max ≤ 10 × median`.
pub fn variance_bound_check(samples: &StieltjesSamples, c0: f64) -> Result<BoundReport> {
    check_samples(samples, c0)?;
    let n = samples.n as f64;
    let law = SemicircleLaw::default();
    let ratios = samples
        .grid
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let gap = z.z() + 2.0 * law.stieltjes(*z);
            samples.variance(k) * n * gap.norm_sqr()
        })
        .collect();
    let mut report = grid_stability("variance", samples.n, &samples.grid, ratios);
    report.constants.insert("c0".into(), c0);
    report.constants.insert("replicas".into(), samples.replicas() as f64);
    Ok(report)
}

/// `E|s_n - Ê s_n|^{2l} · n^{2l} v^{3l}` per grid point, same stability rule.
pub fn moment_bound_check(samples: &StieltjesSamples, l: u32, c0: f64) -> Result<BoundReport> {
    if !(l == 1 || l == 2) {
        return Err(Error::InvalidArgument(format!("moment order l = {l}, expected 1 or 2")));
    }
    check_samples(samples, c0)?;
    let n = samples.n as f64;
    let lf = l as f64;
    let ratios = samples
        .grid
        .iter()
        .enumerate()
        .map(|(k, z)| samples.central_abs_moment(k, 2.0 * lf) * n.powf(2.0 * lf) * z.v().powf(3.0 * lf))
        .collect();
    let mut report = grid_stability(&format!("moment_l{l}"), samples.n, &samples.grid, ratios);
    report.constants.insert("c0".into(), c0);
    report.constants.insert("l".into(), lf);
    report.constants.insert("replicas".into(), samples.replicas() as f64);
    Ok(report)
}

/// Compares the grid maxima of several same-named reports at different `n`:
/// `max_n / min_n ≤ factor`.
pub fn cross_n_drift(name: &str, reports: &[BoundReport], factor: f64) -> Result<BoundReport> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("drift needs at least two sizes".into()));
    }
    let maxima: Vec<(usize, f64)> = reports
        .iter()
        .map(|r| (r.rows.first().map_or(0, |row| row.n), r.max_lhs()))
        .collect();
    let lo = maxima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
    let mut report = BoundReport::new(name);
    report.constants.insert("factor".into(), factor);
    report.summary.insert("drift".into(), if hi == 0.0 { 1.0 } else { hi / lo });
    for (n, m) in maxima {
        let rel = if m == 0.0 && lo == 0.0 { 1.0 } else { m / lo };
        report.rows.push(BoundRow::judged(n, None, None, rel, factor, true));
    }
    Ok(report.finish())
}

/// Exceedance counts `#{|β_i| > 2}` for one `(n, v)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaCell {
    pub n: usize,
    pub v: f64,
    pub replicas: usize,
    pub samples: usize,
    pub exceedances: usize,
}

impl BetaCell {
    /// Tallies diagnostics gathered from `replicas` independent matrices.
    pub fn from_diags(n: usize, v: f64, replicas: usize, diags: &[LeaveOneOutDiag]) -> Self {
        BetaCell {
            n,
            v,
            replicas,
            samples: diags.len(),
            exceedances: diags.iter().filter(|d| d.beta.norm() > 2.0).count(),
        }
    }

    pub fn frequency(&self) -> f64 {
        self.exceedances as f64 / self.samples as f64
    }

    /// `frequency · n² v²`.
    pub fn scaled(&self) -> f64 {
        let n = self.n as f64;
        self.frequency() * n * n * self.v * self.v
    }
}

/// Judges `P(|β_i| > 2) · n² v²` over an `(n, v)` grid.
///
/// For each `v`, the scaled frequency at a larger `n` may not exceed
/// [`BETA_DRIFT_FACTOR`] times the one at the next smaller `n`. Cells with
/// `v ≥ 1/2` must have no exceedances at all, since `|β_i| ≤ 1/v`. Cells below
/// `v₀ = C₀ n^{-1/2}` are reported but not judged.
pub fn beta_exceedance_check(cells: &[BetaCell], c0: f64) -> Result<BoundReport> {
    if cells.is_empty() || cells.iter().any(|c| c.samples == 0) {
        return Err(Error::InsufficientSamples("no β samples".into()));
    }
    if let Some(c) = cells.iter().find(|c| c.replicas < MIN_BETA_REPLICAS) {
        return Err(Error::InsufficientSamples(format!(
            "{} replicas at n = {}, need at least {MIN_BETA_REPLICAS}",
            c.replicas, c.n
        )));
    }
    let mut report = BoundReport::new("beta_exceedance");
    report.constants.insert("c0".into(), c0);
    report.constants.insert("drift_factor".into(), BETA_DRIFT_FACTOR);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&i, &j| cells[i].v.total_cmp(&cells[j].v).then(cells[i].n.cmp(&cells[j].n)));
    let mut previous: Option<&BetaCell> = None;
    for &i in &order {
        let c = &cells[i];
        let in_regime = c.v >= c0 / (c.n as f64).sqrt();
        let mut rhs = f64::INFINITY;
        if let Some(p) = previous.filter(|p| p.v == c.v) {
            // both zero passes: 0 ≤ 4·0
            rhs = BETA_DRIFT_FACTOR * p.scaled();
        }
        if c.v >= 0.5 {
            rhs = 0.0;
        }
        report.rows.push(BoundRow::judged(c.n, None, Some(c.v), c.scaled(), rhs, in_regime));
        previous = Some(c);
    }
    let total: usize = cells.iter().map(|c| c.exceedances).sum();
    report.summary.insert("exceedances".into(), total as f64);
    Ok(report.finish())
}
