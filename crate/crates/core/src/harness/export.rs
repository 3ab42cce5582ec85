//! CSV/JSON persistence. Every file starts with the same metadata: the
//! config hash, the master seed and the crate version. No timestamps, so a
//! rerun of the same config reproduces files byte for byte.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{Format, RunConfig};
use super::rate::{DeltaSummary, RateFit};
use super::run::ReplicaSet;
use crate::bounds::BoundReport;
use crate::resolvent::LeaveOneOutDiag;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub report: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Metadata {
    pub fn new(report: &str, cfg: &RunConfig) -> Self {
        Metadata {
            report: report.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// A table that can be written as CSV as well as JSON.
pub trait Tabular: Serialize {
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
    /// Extra `# key=value` lines after the metadata.
    fn notes(&self) -> Vec<(String, String)> {
        Vec::new()
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

impl Tabular for RateFit {
    fn columns(&self) -> Vec<&'static str> {
        vec!["n", "median", "q25", "q75", "sqrt_n_times_median"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .map(|p| {
                vec![p.n.to_string(), num(p.median), num(p.q25), num(p.q75), num(p.sqrt_n_times_median())]
            })
            .collect()
    }

    fn notes(&self) -> Vec<(String, String)> {
        vec![
            ("slope".into(), num(self.slope)),
            ("intercept".into(), num(self.intercept)),
            ("slope_se".into(), num(self.slope_se)),
            ("r_squared".into(), num(self.r_squared)),
            ("degenerate".into(), self.degenerate.to_string()),
        ]
    }
}

/// Per-`n` summaries of `Δ_p` (and `Δ_n`) without a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub summaries: Vec<DeltaSummary>,
    pub delta_n: Vec<f64>,
}

impl Tabular for DeltaTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["n", "replicas", "median", "q25", "q75", "mean", "min", "max", "delta_n"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.summaries
            .iter()
            .zip(&self.delta_n)
            .map(|(s, d)| {
                vec![
                    s.n.to_string(),
                    s.replicas.to_string(),
                    num(s.median),
                    num(s.q25),
                    num(s.q75),
                    num(s.mean),
                    num(s.min),
                    num(s.max),
                    num(*d),
                ]
            })
            .collect()
    }
}

impl Tabular for BoundReport {
    fn columns(&self) -> Vec<&'static str> {
        vec!["name", "n", "u", "v", "lhs", "rhs", "in_regime", "pass"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let opt = |x: Option<f64>| x.map_or(String::new(), num);
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.name.clone(),
                    r.n.to_string(),
                    opt(r.u),
                    opt(r.v),
                    num(r.lhs),
                    num(r.rhs),
                    r.in_regime.to_string(),
                    r.pass.to_string(),
                ]
            })
            .collect()
    }

    fn notes(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self.constants.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        out.extend(self.summary.iter().map(|(k, v)| (k.clone(), num(*v))));
        out.push(("pass".into(), self.pass.to_string()));
        out
    }
}

/// Leave-one-out rows with their bound flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagTable(pub Vec<LeaveOneOutDiag>);

impl Tabular for DiagTable {
    fn columns(&self) -> Vec<&'static str> {
        vec![
            "i", "n", "u", "v", "x_ii", "beta_re", "beta_im", "gamma_re", "gamma_im", "gamma_hat_re", "gamma_hat_im",
            "xi_re", "xi_im", "eps_re", "eps_im", "a_n_re", "a_n_im", "b_n_re", "b_n_im", "beta_bound_ok",
            "xi_bound_ok", "a_n_below_one",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|r| {
                let mut row = vec![r.index.to_string(), r.n.to_string(), num(r.z.u()), num(r.z.v()), num(r.x_ii)];
                for c in [r.beta, r.gamma, r.gamma_hat, r.xi, r.eps, r.a_n, r.b_n] {
                    row.push(num(c.re));
                    row.push(num(c.im));
                }
                row.push(r.beta_within_bound().to_string());
                row.push(r.xi_within_bound().to_string());
                row.push(r.a_n_below_one().to_string());
                row
            })
            .collect()
    }
}

/// Eigenvalues of every replica in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraTable {
    pub rows: Vec<(usize, usize, u64, f64)>,
}

impl SpectraTable {
    pub fn from_set(set: &ReplicaSet) -> Self {
        let rows = set
            .sizes
            .iter()
            .flat_map(|s| s.replicas.iter())
            .flat_map(|r| r.spectrum.eigenvalues().iter().map(move |&x| (r.n, r.index, r.seed, x)))
            .collect();
        SpectraTable { rows }
    }
}

impl Tabular for SpectraTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["n", "replica", "seed", "eigenvalue"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|&(n, r, s, x)| vec![n.to_string(), r.to_string(), s.to_string(), num(x)])
            .collect()
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: &'a Metadata,
    report: &'a T,
}

#[derive(Deserialize)]
struct OwnedEnvelope<T> {
    metadata: Metadata,
    report: T,
}

/// Writes `report` to `path` in the requested format.
pub fn export<T: Tabular>(report: &T, meta: &Metadata, path: &Path, format: Format) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &Envelope { metadata: meta, report })?;
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        Format::Csv => write_csv(report, meta, &mut w).map_err(|e| Error::io(path, e))?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_csv<T: Tabular, W: Write>(report: &T, meta: &Metadata, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "# report={}", meta.report)?;
    writeln!(w, "# config_hash={}", meta.config_hash)?;
    writeln!(w, "# seed={}", meta.seed)?;
    writeln!(w, "# version={}", meta.version)?;
    for (k, v) in report.notes() {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{}", report.columns().join(","))?;
    for row in report.rows() {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// A CSV file as written by [`export`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Metadata,
    pub notes: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |reason: String| Error::Parse { path: path.to_path_buf(), reason };
    let mut notes = Vec::new();
    let mut columns = None;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| parse_err(format!("bad header line '{line}'")))?;
            notes.push((k.to_string(), v.to_string()));
        } else if columns.is_none() {
            columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
        } else if !line.is_empty() {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    let take = |notes: &mut Vec<(String, String)>, key: &str| -> Result<String> {
        let k = notes
            .iter()
            .position(|(k, _)| k == key)
            .ok_or_else(|| parse_err(format!("missing '{key}' header")))?;
        Ok(notes.remove(k).1)
    };
    let metadata = Metadata {
        report: take(&mut notes, "report")?,
        config_hash: take(&mut notes, "config_hash")?,
        seed: take(&mut notes, "seed")?.parse().map_err(|e| parse_err(format!("seed: {e}")))?,
        version: take(&mut notes, "version")?,
    };
    Ok(CsvTable {
        metadata,
        notes,
        columns: columns.ok_or_else(|| parse_err("no column header".into()))?,
        rows,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(Metadata, T)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let env: OwnedEnvelope<T> = serde_json::from_str(&text)?;
    Ok((env.metadata, env.report))
}

/// Two-column `x,y` file for external plotting.
pub fn write_plot_data(path: &Path, x_name: &str, y_name: &str, points: &[(f64, f64)]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let write = |w: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
        writeln!(w, "{x_name},{y_name}")?;
        for (x, y) in points {
            writeln!(w, "{x},{y}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}
