use num_complex::Complex64;
use wigner_core::bounds::{
    bai_rhs, beta_exceedance_check, validate_constants, variance_bound_check, BetaCell, BoundReport,
    StieltjesSamples, DEFAULT_C0,
};
use wigner_core::harness::{
    export, read_csv, read_json, run_diagnostics, run_replicas, DeltaTable, ExpectationSource, Format, Metadata,
    RateFit, RunConfig, SpectraTable,
};
use wigner_core::law::{SemicircleLaw, UpperHalfPoint};
use wigner_core::spectra::esd;

#[test]
fn median_delta_is_of_order_inverse_root_n() {
    let mut cfg = RunConfig::new(vec![64], 100, 17);
    cfg.z_grid = vec![[0.0, 1.0]];
    let set = run_replicas(&cfg).unwrap();
    let s = set.sizes[0].summary().unwrap();
    let scaled = s.median * 8.0;
    assert!((0.2..=5.0).contains(&scaled), "√n·median = {scaled}");
}

#[test]
fn pooled_esd_is_closer_than_typical_replica() {
    let mut cfg = RunConfig::new(vec![256], 200, 23);
    cfg.z_grid = vec![[0.0, 1.0]];
    let set = run_replicas(&cfg).unwrap();
    let size = &set.sizes[0];
    assert!(size.delta_n().unwrap() < size.summary().unwrap().median);
    let one = wigner_core::harness::delta_n_estimate(&size.spectra()[..1], &SemicircleLaw::default()).unwrap();
    assert_eq!(one, size.replicas[0].delta_p);
}

#[test]
fn variance_far_from_the_spectrum_is_small() {
    let mut cfg = RunConfig::new(vec![64], 60, 5);
    cfg.z_grid = vec![[0.0, 10.0], [0.0, 1.0]];
    let set = run_replicas(&cfg).unwrap();
    let r = variance_bound_check(&set.sizes[0].stieltjes_samples(&set.grid).unwrap(), DEFAULT_C0).unwrap();
    let far = r.rows[0].lhs;
    assert!(far.is_finite() && far < r.rows[1].lhs && far < 1e-3, "{far}");
}

#[test]
fn beta_never_exceeds_two_at_large_v() {
    let mut cfg = RunConfig::new(vec![16], 100, 3);
    cfg.z_grid = vec![[0.0, 5.0], [0.0, 0.1]];
    let set = run_replicas(&cfg).unwrap();
    let cells = run_diagnostics(&cfg, &set).unwrap();
    let large = cells[0].beta_cell();
    assert_eq!(large.exceedances, 0);
    let report = beta_exceedance_check(&[large, cells[1].beta_cell()], DEFAULT_C0).unwrap();
    // v = 0.1 < 2/√16 is reported but not judged
    assert!(!report.rows.iter().find(|r| r.v == Some(0.1)).unwrap().in_regime);
    assert!(report.pass);
}

#[test]
fn analytic_expectation_mode_changes_only_eps_terms() {
    let mut cfg = RunConfig::new(vec![12], 4, 9);
    cfg.z_grid = vec![[0.5, 0.4]];
    let set = run_replicas(&cfg).unwrap();
    let mean = run_diagnostics(&cfg, &set).unwrap();
    cfg.expectation = ExpectationSource::Analytic;
    let analytic = run_diagnostics(&cfg, &set).unwrap();
    for (a, b) in mean[0].rows.iter().zip(&analytic[0].rows) {
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.gamma, b.gamma);
        assert!(a.eps_identity_residual() < 1e-10 && b.eps_identity_residual() < 1e-10);
    }
}

#[test]
fn smoothing_inequality_on_wigner_samples() {
    let mut cfg = RunConfig::new(vec![256], 3, 31);
    cfg.z_grid = vec![[0.0, 1.0]];
    let set = run_replicas(&cfg).unwrap();
    let c = validate_constants(16.0, 3.0, 2.0, 2.0 / 16.0).unwrap();
    for r in &set.sizes[0].replicas {
        let report = bai_rhs(&esd(&r.spectrum).unwrap(), &SemicircleLaw::default(), &c).unwrap();
        assert!(report.pass);
        // every eigenvalue sits inside [-3, 3], so the tail term vanishes
        assert_eq!(report.summary["term_tail"], 0.0);
    }
}

#[test]
fn identical_replicas_give_zero_variance_ratios() {
    let grid = vec![UpperHalfPoint::new(0.0, 0.5).unwrap()];
    let s = StieltjesSamples::new(64, grid, vec![vec![Complex64::new(0.2, 0.7)]; 80]).unwrap();
    let r = variance_bound_check(&s, DEFAULT_C0).unwrap();
    assert_eq!(r.rows[0].lhs, 0.0);
    assert!(r.pass);
}

#[test]
fn exports_are_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(vec![16, 32, 64], 8, 4);
    cfg.z_grid = vec![[0.0, 0.5]];
    let mut bytes = Vec::new();
    for workers in [1, 3] {
        cfg.workers = workers;
        let set = run_replicas(&cfg).unwrap();
        let path = dir.path().join(format!("spectra_{workers}.csv"));
        export(&SpectraTable::from_set(&set), &Metadata::new("spectra", &cfg), &path, Format::Csv).unwrap();
        let fit = set.rate_fit().unwrap();
        let fpath = dir.path().join(format!("fit_{workers}.json"));
        export(&fit, &Metadata::new("rate_fit", &cfg), &fpath, Format::Json).unwrap();
        bytes.push((std::fs::read(&path).unwrap(), std::fs::read(&fpath).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn rate_fit_round_trips_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(vec![16, 32, 64], 5, 8);
    cfg.z_grid = vec![[0.0, 0.5]];
    let set = run_replicas(&cfg).unwrap();
    let fit = set.rate_fit().unwrap();
    let meta = Metadata::new("rate_fit", &cfg);

    let csv = dir.path().join("fit.csv");
    export(&fit, &meta, &csv, Format::Csv).unwrap();
    let table = read_csv(&csv).unwrap();
    assert_eq!(table.metadata, meta);
    assert_eq!(table.columns, ["n", "median", "q25", "q75", "sqrt_n_times_median"]);
    let medians: Vec<f64> = table.column("median").unwrap().iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(medians, fit.points.iter().map(|p| p.median).collect::<Vec<_>>());
    assert_eq!(table.note("slope").unwrap().parse::<f64>().unwrap(), fit.slope);

    let json = dir.path().join("fit.json");
    export(&fit, &meta, &json, Format::Json).unwrap();
    let (m, back): (Metadata, RateFit) = read_json(&json).unwrap();
    assert_eq!(m, meta);
    assert_eq!(back, fit);

    let deltas = DeltaTable { summaries: set.summaries().unwrap(), delta_n: vec![0.1, 0.2, 0.3] };
    let dpath = dir.path().join("deltas.json");
    export(&deltas, &meta, &dpath, Format::Json).unwrap();
    assert_eq!(read_json::<DeltaTable>(&dpath).unwrap().1, deltas);
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(vec![8], 1, 0);
    let empty = BoundReport::combine("empty", &[]);
    let path = dir.path().join("empty.csv");
    export(&empty, &Metadata::new("empty", &cfg), &path, Format::Csv).unwrap();
    let table = read_csv(&path).unwrap();
    assert!(table.rows.is_empty());
    assert_eq!(table.columns.len(), 8);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l.starts_with("name,")));
}

#[test]
fn beta_cells_scale_by_n_squared_v_squared() {
    let c = BetaCell { n: 100, v: 0.3, replicas: 100, samples: 1000, exceedances: 5 };
    assert!((c.scaled() - 0.005 * 1e4 * 0.09).abs() < 1e-12);
}
