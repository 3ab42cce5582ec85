use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{validate_constants, BaiConstants, DEFAULT_C0};
use crate::ensemble::{make_distribution, truncate_center_rescale, EntryKind, WignerSpec};
use crate::law::UpperHalfPoint;
use crate::{Error, Result};

/// Entry laws of the simulated ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Off-diagonal law, always standardised to variance 1.
    pub entries: EntryKind,
    /// Diagonal law; defaults to `entries`.
    #[serde(default)]
    pub diag: Option<EntryKind>,
    /// Diagonal standard deviation.
    #[serde(default = "one")]
    pub sigma: f64,
}

fn one() -> f64 {
    1.0
}

impl EnsembleConfig {
    pub fn of(kind: EntryKind) -> Self {
        EnsembleConfig { entries: kind, diag: None, sigma: 1.0 }
    }

    pub fn gaussian() -> Self {
        Self::of(EntryKind::Gaussian)
    }
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self::gaussian()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Rate,
    Variance,
    Moment,
    Bai,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}', expected csv or json"))),
        }
    }
}

/// Source of the `E s_n` estimate fed to the leave-one-out quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationSource {
    /// Replica mean of `s_n(z)` from the same run.
    #[default]
    ReplicaMean,
    /// The limiting transform `s(z)`.
    Analytic,
}

/// Constants of the smoothing inequality; `v = v_scale · n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaiSettings {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub v_scale: f64,
}

impl Default for BaiSettings {
    fn default() -> Self {
        BaiSettings { a: 16.0, b: 3.0, eps: 2.0, v_scale: 2.0 }
    }
}

impl BaiSettings {
    pub fn constants_for(&self, n: usize) -> Result<BaiConstants> {
        validate_constants(self.a, self.b, self.eps, self.v_scale / (n as f64).sqrt())
    }
}

/// A Monte Carlo experiment, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    /// `[u, v]` pairs.
    #[serde(default = "default_z_grid")]
    pub z_grid: Vec<[f64; 2]>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub truncation: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub bai: BaiSettings,
    #[serde(default)]
    pub expectation: ExpectationSource,
}

fn default_c0() -> f64 {
    DEFAULT_C0
}

/// `u ∈ {-3, -1.5, 0, 1.5, 3}` × `v ∈ {0.2, 0.5, 1}`.
pub fn default_z_grid() -> Vec<[f64; 2]> {
    let mut grid = Vec::new();
    for v in [0.2, 0.5, 1.0] {
        for u in [-3.0, -1.5, 0.0, 1.5, 3.0] {
            grid.push([u, v]);
        }
    }
    grid
}

impl RunConfig {
    /// Gaussian ensemble, default grid, no checks selected.
    pub fn new(n_grid: Vec<usize>, replicas: usize, seed: u64) -> Self {
        RunConfig {
            ensemble: EnsembleConfig::default(),
            n_grid,
            replicas,
            z_grid: default_z_grid(),
            checks: Vec::new(),
            seed,
            workers: 0,
            truncation: false,
            output_dir: None,
            format: Format::Csv,
            c0: DEFAULT_C0,
            bai: BaiSettings::default(),
            expectation: ExpectationSource::ReplicaMean,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(reason) => Error::Parse {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::Config("n_grid entries must be positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly ascending".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        for &[u, v] in &self.z_grid {
            UpperHalfPoint::new(u, v).map_err(|_| Error::Config(format!("z = {u}+{v}i is not in the upper half plane")))?;
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Config("c0 must be positive".into()));
        }
        if !(self.ensemble.sigma > 0.0) {
            return Err(Error::Config("ensemble.sigma must be positive".into()));
        }
        make_distribution(self.ensemble.entries)?;
        if let Some(d) = self.ensemble.diag {
            make_distribution(d)?;
        }
        if self.checks.contains(&Check::Bai) {
            self.bai.constants_for(self.n_grid[0])?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<UpperHalfPoint> {
        self.z_grid
            .iter()
            .map(|&[u, v]| UpperHalfPoint::new(u, v).expect("validated"))
            .collect()
    }

    /// Ensemble at dimension `n`, with the truncation pipeline applied when
    /// enabled. The seed is left at 0; callers set it per replica.
    pub fn spec_for(&self, n: usize) -> Result<WignerSpec> {
        let sigma = self.ensemble.sigma;
        let mut offdiag = make_distribution(self.ensemble.entries)?;
        let mut diag = make_distribution(self.ensemble.diag.unwrap_or(self.ensemble.entries))?
            .with_variance(sigma * sigma)?;
        if self.truncation {
            offdiag = truncate_center_rescale(&offdiag, n)?;
            diag = truncate_center_rescale(&diag, n)?;
        }
        let spec = WignerSpec { n, offdiag, diag, sigma, seed: 0 };
        spec.validate()?;
        Ok(spec)
    }

    /// SHA-256 of the experiment definition. Scheduling and output options
    /// (`workers`, `output_dir`, `format`) do not enter the hash.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            workers: 0,
            output_dir: None,
            format: Format::Csv,
            ..self.clone()
        };
        let text = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
