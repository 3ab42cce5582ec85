use serde::{Deserialize, Serialize};

use crate::law::SemicircleLaw;
use crate::spectra::{kolmogorov_distance, mean_esd, Spectrum};
use crate::{Error, Result};

/// Largest log-log slope accepted as consistent with an `n^{-1/2}` rate.
pub const RATE_SLOPE_MAX: f64 = -0.45;
/// Largest accepted `max / min` of the `√n · median` sequence.
pub const WITNESS_SPREAD_MAX: f64 = 3.0;

/// Distribution of `Δ_p` over the replicas at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub n: usize,
    pub replicas: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl DeltaSummary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    pub fn sqrt_n_times_median(&self) -> f64 {
        (self.n as f64).sqrt() * self.median
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = p * (m - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_deltas(n: usize, deltas: &[f64]) -> Result<DeltaSummary> {
    if deltas.is_empty() {
        return Err(Error::InsufficientSamples(format!("no Δ_p values at n = {n}")));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(DeltaSummary {
        n,
        replicas: deltas.len(),
        median: quantile_sorted(&sorted, 0.5),
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
        mean: deltas.iter().sum::<f64>() / deltas.len() as f64,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Least-squares fit of `log median Δ_p` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<DeltaSummary>,
    pub slope: f64,
    pub intercept: f64,
    /// `+∞` when the fit is degenerate.
    pub slope_se: f64,
    pub r_squared: f64,
    /// All `n` equal: the slope is undefined and reported as 0.
    pub degenerate: bool,
}

impl RateFit {
    /// `√n · median(Δ_p)` in `n` order.
    pub fn witness(&self) -> Vec<f64> {
        self.points.iter().map(DeltaSummary::sqrt_n_times_median).collect()
    }

    /// `max / min` of the witness sequence.
    pub fn witness_spread(&self) -> f64 {
        let w = self.witness();
        let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn slope_ok(&self) -> bool {
        !self.degenerate && self.slope <= RATE_SLOPE_MAX
    }

    pub fn witness_ok(&self) -> bool {
        self.witness_spread() <= WITNESS_SPREAD_MAX
    }
}

pub fn rate_fit(points: &[DeltaSummary]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "rate fit needs at least 3 sizes, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.median > 0.0)) {
        return Err(Error::InvalidArgument(format!("median Δ_p at n = {} is not positive", p.n)));
    }
    let mut points = points.to_vec();
    points.sort_by_key(|p| p.n);
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Ok(RateFit {
            points,
            slope: 0.0,
            intercept: my,
            slope_se: f64::INFINITY,
            r_squared: 0.0,
            degenerate: true,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    Ok(RateFit {
        points,
        slope,
        intercept,
        slope_se: (ssr / (k - 2.0) / sxx).sqrt(),
        r_squared,
        degenerate: false,
    })
}

/// `‖E F^{W_n} - F‖` with the expectation replaced by the pooled ESD.
pub fn delta_n_estimate(spectra: &[Spectrum], law: &SemicircleLaw) -> Result<f64> {
    Ok(kolmogorov_distance(&mean_esd(spectra)?, law))
}
