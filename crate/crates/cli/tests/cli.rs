use std::path::Path;
use std::process::{Command, Output};

fn wigner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wigner")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lawcheck_passes() {
    let o = wigner(&["lawcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("8.678911"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"n_grid\": [64, 32], ").unwrap();
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"n_grid":[16],"replicas":2,"seed":1,"colour":"red"}"#).unwrap();
    let descending = dir.path().join("descending.json");
    std::fs::write(&descending, r#"{"n_grid":[32,16],"replicas":2,"seed":1}"#).unwrap();

    assert_eq!(wigner(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wigner(&["rate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    for cfg in [&bad, &unknown, &descending] {
        let o = wigner(&["simulate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", cfg.display());
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(wigner(&["simulate", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(wigner(&["simulate", "--replicas", "0"]).status.code(), Some(2));
    assert_eq!(wigner(&["--help"]).status.code(), Some(0));
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for w in ["1", "2"] {
        let out = dir.path().join(w);
        let o = wigner(&["simulate", "--n", "16,32", "--replicas", "4", "--seed", "7", "--workers", w, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        runs.push(read_dir_sorted(&out));
    }
    let names: Vec<_> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["deltas.csv", "spectra.csv"]);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn rate_from_config_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rate.json");
    std::fs::write(&cfg, r#"{"n_grid":[16,32,64],"replicas":6,"seed":3,"format":"json"}"#).unwrap();
    let out = dir.path().join("out");
    let o = wigner(&["rate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stdout(&o));
    assert!(stdout(&o).contains("slope"));
    let fit = std::fs::read_to_string(out.join("rate_fit.json")).unwrap();
    assert!(fit.trim_start().starts_with('{') && fit.contains("\"config_hash\""));
    assert!(out.join("witness_plot.csv").exists());
}

#[test]
fn small_bai_and_diag_runs_pass() {
    let o = wigner(&["bai", "--n", "64", "--replicas", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = wigner(&["diag", "--n", "16,32", "--replicas", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    // too few replicas for the exceedance frequency is a precondition failure
    let o = wigner(&["diag", "--n", "16,32", "--replicas", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient samples"));
}
