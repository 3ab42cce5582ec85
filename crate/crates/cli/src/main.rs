use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wigner_core::bounds::{
    beta_exceedance_check, cross_n_drift, moment_bound_check, variance_bound_check, BetaCell, BoundReport,
    CROSS_N_FACTOR,
};
use wigner_core::harness::{
    export, run_bai, run_diagnostics, run_replicas, Check, DeltaTable, DiagTable, Format, Metadata, ReplicaSet,
    RunConfig, SpectraTable, Tabular, RATE_SLOPE_MAX, WITNESS_SPREAD_MAX,
};
use wigner_core::law::{integral_bound_parts, sc_cdf, sc_stieltjes, SemicircleLaw};
use wigner_core::quad::tanh_sinh;
use wigner_core::{Complex64, Error};

#[derive(Parser)]
#[command(name = "wigner", version, about = "Wigner matrix spectra and semicircle-law rate experiments")]
struct Cli {
    /// JSON run configuration; per-command defaults are used without it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; nothing is written without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Replica count override.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Matrix sizes override, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Sample spectra and report Δ_p per size.
    Simulate,
    /// Fit the decay of median Δ_p against n.
    Rate,
    /// Variance and central-moment stability of s_n(z) over the z-grid.
    Variance,
    /// Smoothing-inequality report for every sampled spectrum.
    Bai,
    /// Leave-one-out tables and the |β_i| > 2 frequency.
    Diag,
    /// Self-checks of the limiting law.
    Lawcheck,
}

fn defaults(cmd: Command) -> RunConfig {
    let mut cfg = match cmd {
        Command::Simulate => RunConfig::new(vec![64, 128, 256], 10, 1),
        Command::Rate => RunConfig::new(vec![64, 128, 256, 512], 50, 1),
        Command::Variance => RunConfig::new(vec![128, 256], 100, 1),
        Command::Bai => RunConfig::new(vec![256], 20, 1),
        Command::Diag | Command::Lawcheck => RunConfig::new(vec![64, 128], 100, 1),
    };
    match cmd {
        Command::Simulate | Command::Rate | Command::Bai => cfg.z_grid = vec![[0.0, 1.0]],
        Command::Diag => {
            cfg.z_grid = [0.25, 0.5]
                .iter()
                .flat_map(|&v| [-1.5, 0.0, 1.5].map(|u| [u, v]))
                .collect();
        }
        _ => {}
    }
    cfg
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => defaults(cli.command),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if let Some(n) = &cli.n {
        cfg.n_grid = n.clone();
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(f) = &cli.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Output<'a> {
    cfg: &'a RunConfig,
}

impl Output<'_> {
    fn write<T: Tabular>(&self, stem: &str, report: &T) -> Result<(), Error> {
        let Some(dir) = &self.cfg.output_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        let ext = match self.cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = dir.join(format!("{stem}.{ext}"));
        export(report, &Metadata::new(stem, self.cfg), &path, self.cfg.format)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn dir(&self) -> Option<&Path> {
        self.cfg.output_dir.as_deref()
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn delta_table(set: &ReplicaSet) -> Result<DeltaTable, Error> {
    let mut delta_n = Vec::new();
    for s in &set.sizes {
        delta_n.push(s.delta_n()?);
    }
    Ok(DeltaTable { summaries: set.summaries()?, delta_n })
}

fn print_deltas(table: &DeltaTable) {
    println!("{:>6} {:>8} {:>10} {:>10} {:>10} {:>10}", "n", "replicas", "median", "iqr", "mean", "delta_n");
    for (s, d) in table.summaries.iter().zip(&table.delta_n) {
        println!(
            "{:>6} {:>8} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            s.n,
            s.replicas,
            s.median,
            s.iqr(),
            s.mean,
            d
        );
    }
}

fn simulate(cfg: &RunConfig) -> Result<bool, Error> {
    let out = Output { cfg };
    let set = run_replicas(cfg)?;
    let table = delta_table(&set)?;
    print_deltas(&table);
    out.write("spectra", &SpectraTable::from_set(&set))?;
    out.write("deltas", &table)?;
    Ok(true)
}

fn rate(cfg: &RunConfig) -> Result<bool, Error> {
    let out = Output { cfg };
    let set = run_replicas(cfg)?;
    let table = delta_table(&set)?;
    print_deltas(&table);
    let fit = set.rate_fit()?;
    let w: Vec<String> = fit.witness().iter().map(|x| format!("{x:.4}")).collect();
    println!(
        "slope = {:.4} ± {:.4} (R² = {:.4})  {} (≤ {RATE_SLOPE_MAX})",
        fit.slope,
        fit.slope_se,
        fit.r_squared,
        verdict(fit.slope_ok())
    );
    println!(
        "sqrt(n)·median = [{}], max/min = {:.3}  {} (≤ {WITNESS_SPREAD_MAX})",
        w.join(", "),
        fit.witness_spread(),
        verdict(fit.witness_ok())
    );
    out.write("rate_fit", &fit)?;
    out.write("deltas", &table)?;
    if let Some(dir) = out.dir() {
        let points: Vec<(f64, f64)> = fit.points.iter().map(|p| (p.n as f64, p.sqrt_n_times_median())).collect();
        wigner_core::harness::export::write_plot_data(&dir.join("witness_plot.csv"), "n", "sqrt_n_median", &points)?;
    }
    Ok(fit.slope_ok() && fit.witness_ok())
}

fn report_line(r: &BoundReport) {
    let mut extra: Vec<String> = r.summary.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
    extra.truncate(6);
    println!("{:<16} {}  {}", r.name, verdict(r.pass), extra.join(" "));
}

fn variance(cfg: &RunConfig) -> Result<bool, Error> {
    let out = Output { cfg };
    let set = run_replicas(cfg)?;
    let wanted = |c: Check| cfg.checks.is_empty() || cfg.checks.contains(&c);
    let mut reports = Vec::new();
    let mut families: Vec<(String, Vec<BoundReport>)> = Vec::new();
    if wanted(Check::Variance) {
        families.push(("variance".into(), Vec::new()));
    }
    if wanted(Check::Moment) {
        families.push(("moment_l1".into(), Vec::new()));
        families.push(("moment_l2".into(), Vec::new()));
    }
    for size in &set.sizes {
        let samples = size.stieltjes_samples(&set.grid)?;
        for (name, list) in families.iter_mut() {
            let r = match name.as_str() {
                "variance" => variance_bound_check(&samples, cfg.c0)?,
                "moment_l1" => moment_bound_check(&samples, 1, cfg.c0)?,
                _ => moment_bound_check(&samples, 2, cfg.c0)?,
            };
            print!("n={:<5} ", size.n);
            report_line(&r);
            list.push(r);
        }
    }
    for (name, list) in &families {
        reports.extend(list.iter().cloned());
        if list.len() >= 2 {
            let d = cross_n_drift(&format!("{name}_drift"), list, CROSS_N_FACTOR)?;
            report_line(&d);
            reports.push(d);
        }
    }
    let combined = BoundReport::combine("variance", &reports);
    out.write("variance", &combined)?;
    println!("overall {}", verdict(combined.pass));
    Ok(combined.pass)
}

fn bai(cfg: &RunConfig) -> Result<bool, Error> {
    let out = Output { cfg };
    let set = run_replicas(cfg)?;
    let reports = run_bai(cfg, &set)?;
    for (k, r) in reports.iter().enumerate() {
        let row = &r.rows[0];
        println!(
            "sample {k:>3} n={:<5} lhs={:.5} rhs={:.5} [{:.4} + {:.4} + {:.4}]×{:.4}  {}",
            row.n,
            row.lhs,
            row.rhs,
            r.summary["term_stieltjes"],
            r.summary["term_tail"],
            r.summary["term_smoothness"],
            r.constants["prefactor"],
            verdict(r.pass)
        );
    }
    let combined = BoundReport::combine("bai", &reports);
    out.write("bai", &combined)?;
    Ok(combined.pass)
}

fn diag(cfg: &RunConfig) -> Result<bool, Error> {
    let out = Output { cfg };
    let set = run_replicas(cfg)?;
    let cells = run_diagnostics(cfg, &set)?;
    let mut identity_worst: f64 = 0.0;
    let mut bound_violations = 0usize;
    let mut a_n_flags = 0usize;
    for c in &cells {
        for r in &c.rows {
            identity_worst = identity_worst
                .max(r.schur_residual())
                .max(r.eps_identity_residual())
                .max(r.beta_expansion_residual());
            bound_violations += usize::from(!r.beta_within_bound()) + usize::from(!r.xi_within_bound());
            a_n_flags += usize::from(!r.a_n_below_one());
        }
    }
    let identities_ok = identity_worst <= 1e-10 && bound_violations == 0;
    println!(
        "identities: max residual {identity_worst:.2e} (≤ 1e-10), |β|,|ξ| ≤ 1/v violations {bound_violations}  {}",
        verdict(identities_ok)
    );
    println!("|a_n| ≥ 1 occurrences (reported only): {a_n_flags}");

    // pool u for each (n, v)
    let mut pooled: Vec<BetaCell> = Vec::new();
    for c in &cells {
        let cell = c.beta_cell();
        match pooled.iter_mut().find(|p| p.n == cell.n && p.v == cell.v) {
            Some(p) => {
                p.samples += cell.samples;
                p.exceedances += cell.exceedances;
            }
            None => pooled.push(cell),
        }
    }
    for p in &pooled {
        println!(
            "n={:<5} v={:<6} |β|>2: {}/{}  freq·n²v² = {:.4}",
            p.n,
            p.v,
            p.exceedances,
            p.samples,
            p.scaled()
        );
    }
    let beta = beta_exceedance_check(&pooled, cfg.c0)?;
    report_line(&beta);
    out.write("beta_exceedance", &beta)?;
    let rows: Vec<_> = cells.iter().flat_map(|c| c.rows.iter().copied()).collect();
    out.write("diagnostics", &DiagTable(rows))?;
    Ok(identities_ok && beta.pass)
}

fn lawcheck(cfg: &RunConfig) -> Result<bool, Error> {
    let [left, inner, outer] = integral_bound_parts()?;
    let integral = left + inner + outer;
    let integral_ok = integral > 8.5 && integral < 8.9 && integral < 10.0;
    println!("integral of 1/sqrt|u²-4| over [-16, 16] = {integral:.6} (< 10)  {}", verdict(integral_ok));

    let mut worst_cdf: f64 = 0.0;
    for k in 0..1000 {
        let x = -2.0 + 4.0 * (k as f64 + 0.5) / 1000.0;
        let q = tanh_sinh(|_, d, _| (d * (4.0 - d)).max(0.0).sqrt() / (2.0 * PI), -2.0, x, 1e-14)?.value;
        worst_cdf = worst_cdf.max((q - sc_cdf(x, 1.0)).abs());
    }
    let cdf_ok = worst_cdf <= 1e-10 && sc_cdf(0.0, 1.0) == 0.5;
    println!("cdf vs quadrature of the density: max error {worst_cdf:.2e} (≤ 1e-10)  {}", verdict(cdf_ok));

    let mut worst_quad: f64 = 0.0;
    let mut worst_mod: f64 = 0.0;
    for i in 0..100 {
        for j in 0..100 {
            let z = Complex64::new(-6.0 + 12.0 * i as f64 / 99.0, 10f64.powf(-4.0 + 5.0 * j as f64 / 99.0));
            let s = sc_stieltjes(z);
            worst_quad = worst_quad.max((s * s + z * s + 1.0).norm());
            worst_mod = worst_mod.max(s.norm());
        }
    }
    let s_ok = worst_quad <= 1e-12 && worst_mod <= 1.0 + 1e-12;
    println!(
        "s(z)² + z s(z) + 1: max residual {worst_quad:.2e} (≤ 1e-12), max |s| = {worst_mod:.6}  {}",
        verdict(s_ok)
    );
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        let path = dir.join("semicircle.csv");
        SemicircleLaw::default().write_curve_csv(&path, 401)?;
        println!("wrote {}", path.display());
    }
    Ok(integral_ok && cdf_ok && s_ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Rate => rate(&cfg),
        Command::Variance => variance(&cfg),
        Command::Bai => bai(&cfg),
        Command::Diag => diag(&cfg),
        Command::Lawcheck => lawcheck(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
