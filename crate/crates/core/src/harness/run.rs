use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExpectationSource, RunConfig};
use super::rate::{delta_n_estimate, rate_fit, summarize_deltas, DeltaSummary, RateFit};
use crate::bounds::{bai_rhs, BetaCell, BoundReport, StieltjesSamples};
use crate::ensemble::{replica_seed, sample_wigner, SymmetricMatrix};
use crate::law::{sc_stieltjes, SemicircleLaw, UpperHalfPoint};
use crate::resolvent::{empirical_stieltjes, leave_one_out_all, LeaveOneOutDiag};
use crate::spectra::{eigenvalues, esd, kolmogorov_distance, Spectrum};
use crate::{Error, Result};

/// Everything kept from one sampled matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replica {
    pub n: usize,
    pub index: usize,
    pub seed: u64,
    pub spectrum: Spectrum,
    /// `Δ_p = ‖F^{W_n} - F‖` against the unit semicircle.
    pub delta_p: f64,
    /// `s_n(z)` on the configured grid.
    pub stieltjes: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRun {
    pub n: usize,
    pub replicas: Vec<Replica>,
}

impl SizeRun {
    pub fn deltas(&self) -> Vec<f64> {
        self.replicas.iter().map(|r| r.delta_p).collect()
    }

    pub fn spectra(&self) -> Vec<Spectrum> {
        self.replicas.iter().map(|r| r.spectrum.clone()).collect()
    }

    pub fn summary(&self) -> Result<DeltaSummary> {
        summarize_deltas(self.n, &self.deltas())
    }

    pub fn stieltjes_samples(&self, grid: &[UpperHalfPoint]) -> Result<StieltjesSamples> {
        StieltjesSamples::new(
            self.n,
            grid.to_vec(),
            self.replicas.iter().map(|r| r.stieltjes.clone()).collect(),
        )
    }

    /// Replica mean of `s_n` at each grid point.
    pub fn mean_stieltjes(&self) -> Vec<Complex64> {
        let r = self.replicas.len() as f64;
        let k = self.replicas.first().map_or(0, |x| x.stieltjes.len());
        (0..k)
            .map(|j| self.replicas.iter().map(|x| x.stieltjes[j]).sum::<Complex64>() / r)
            .collect()
    }

    pub fn delta_n(&self) -> Result<f64> {
        delta_n_estimate(&self.spectra(), &SemicircleLaw::default())
    }
}

/// Output of [`run_replicas`], ordered by `n` and then replica index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSet {
    pub grid: Vec<UpperHalfPoint>,
    pub sizes: Vec<SizeRun>,
}

impl ReplicaSet {
    pub fn summaries(&self) -> Result<Vec<DeltaSummary>> {
        self.sizes.iter().map(SizeRun::summary).collect()
    }

    pub fn rate_fit(&self) -> Result<RateFit> {
        rate_fit(&self.summaries()?)
    }

    pub fn size(&self, n: usize) -> Option<&SizeRun> {
        self.sizes.iter().find(|s| s.n == n)
    }
}

/// Runs `f` on a pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn tasks(cfg: &RunConfig) -> Vec<(usize, usize)> {
    cfg.n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r)))
        .collect()
}

fn wrap(n: usize, replica: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Replica { n, replica, source: Box::new(e) }
}

/// Re-draws replica `r` at dimension `n`; identical to what
/// [`run_replicas`] used.
pub fn replica_matrix(cfg: &RunConfig, n: usize, r: usize) -> Result<SymmetricMatrix> {
    let spec = cfg.spec_for(n)?.with_seed(replica_seed(cfg.seed, n, r));
    sample_wigner(&spec).map_err(wrap(n, r))
}

fn run_one(cfg: &RunConfig, grid: &[UpperHalfPoint], n: usize, r: usize) -> Result<Replica> {
    let m = replica_matrix(cfg, n, r)?;
    let spectrum = eigenvalues(&m).map_err(wrap(n, r))?;
    let delta_p = kolmogorov_distance(&esd(&spectrum)?, &SemicircleLaw::default());
    let stieltjes = grid.iter().map(|&z| empirical_stieltjes(&spectrum, z)).collect();
    Ok(Replica { n, index: r, seed: m.seed(), spectrum, delta_p, stieltjes })
}

/// Samples `replicas` matrices at every `n`. Replica `r` at size `n` is
/// seeded by `replica_seed(seed, n, r)`, so the result does not depend on
/// the number of workers or on completion order.
pub fn run_replicas(cfg: &RunConfig) -> Result<ReplicaSet> {
    cfg.validate()?;
    let grid = cfg.points();
    let jobs = tasks(cfg);
    let results: Vec<Replica> = with_workers(cfg.workers, || {
        jobs.par_iter()
            .map(|&(n, r)| run_one(cfg, &grid, n, r))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut sizes: Vec<SizeRun> = cfg.n_grid.iter().map(|&n| SizeRun { n, replicas: Vec::new() }).collect();
    for (slot, replica) in results.into_iter().enumerate() {
        sizes[slot / cfg.replicas].replicas.push(replica);
    }
    Ok(ReplicaSet { grid, sizes })
}

/// Leave-one-out diagnostics pooled over replicas at one `(n, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCell {
    pub n: usize,
    pub z: UpperHalfPoint,
    pub es_n: Complex64,
    pub replicas: usize,
    /// Rows of every replica, replica-major.
    pub rows: Vec<LeaveOneOutDiag>,
}

impl DiagnosticCell {
    pub fn beta_cell(&self) -> BetaCell {
        BetaCell::from_diags(self.n, self.z.v(), self.replicas, &self.rows)
    }
}

/// Second pass: redraws every replica and evaluates the leave-one-out
/// quantities at every grid point, using the replica-mean `Ê s_n` from the
/// first pass (or the limiting `s(z)` in analytic mode).
pub fn run_diagnostics(cfg: &RunConfig, set: &ReplicaSet) -> Result<Vec<DiagnosticCell>> {
    let mut cells = Vec::new();
    for size in &set.sizes {
        let n = size.n;
        let es: Vec<Complex64> = match cfg.expectation {
            ExpectationSource::ReplicaMean => size.mean_stieltjes(),
            ExpectationSource::Analytic => set.grid.iter().map(|z| sc_stieltjes(z.z())).collect(),
        };
        let per_replica: Vec<Vec<Vec<LeaveOneOutDiag>>> = with_workers(cfg.workers, || {
            (0..size.replicas.len())
                .into_par_iter()
                .map(|r| {
                    let m = replica_matrix(cfg, n, r)?;
                    set.grid
                        .iter()
                        .zip(&es)
                        .map(|(&z, &e)| leave_one_out_all(&m, z, e).map_err(wrap(n, r)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })??;
        for (k, (&z, &e)) in set.grid.iter().zip(&es).enumerate() {
            let rows = per_replica.iter().flat_map(|rep| rep[k].iter().copied()).collect();
            cells.push(DiagnosticCell { n, z, es_n: e, replicas: size.replicas.len(), rows });
        }
    }
    Ok(cells)
}

/// Smoothing-inequality report for every replica, at `v = v_scale · n^{-1/2}`.
pub fn run_bai(cfg: &RunConfig, set: &ReplicaSet) -> Result<Vec<BoundReport>> {
    let law = SemicircleLaw::default();
    let jobs: Vec<(usize, usize)> = set
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(s, size)| (0..size.replicas.len()).map(move |r| (s, r)))
        .collect();
    with_workers(cfg.workers, || {
        jobs.par_iter()
            .map(|&(s, r)| {
                let size = &set.sizes[s];
                let c = cfg.bai.constants_for(size.n)?;
                let f = esd(&size.replicas[r].spectrum)?;
                bai_rhs(&f, &law, &c).map_err(wrap(size.n, r))
            })
            .collect::<Result<Vec<_>>>()
    })?
}
