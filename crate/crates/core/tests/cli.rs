use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mixcor::bridge::CutoffVector;
use mixcor::estimator::{estimate_latent_correlation, infer_column_specs, project_psd};
use mixcor::glasso::{select_hbic, GlassoConfig};
use mixcor::simulate::{sample_copula, CopulaSpec};
use mixcor::TauVariant;
use nalgebra::DMatrix;
use serde_json::Value;

fn mixcor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixcor")).args(args).output().unwrap()
}

fn ok_report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_csv(path: &Path, names: &[&str], data: &DMatrix<f64>) {
    let mut text = names.join(",");
    text.push('\n');
    for i in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols()).map(|j| data[(i, j)].to_string()).collect();
        let _ = writeln!(text, "{}", row.join(","));
    }
    fs::write(path, text).unwrap();
}

// Parses a matrix TSV written by the tool.
fn read_matrix(path: &Path) -> DMatrix<f64> {
    let text = fs::read_to_string(path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn comonotone_columns_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let x = DMatrix::from_fn(50, 2, |i, j| if j == 0 { i as f64 } else { (i as f64).exp() });
    write_csv(&csv, &["x", "y"], &x);
    let report = ok_report(&mixcor(&["estimate", "--data", path_str(&csv), "--out-dir", path_str(dir.path())]));
    assert_eq!(report["clamped_entries"], 1);
    let m = read_matrix(&dir.path().join("correlation.tsv"));
    assert!((m[(0, 1)] - (1.0 - 1e-6)).abs() < 1e-12);
}

#[test]
fn ternary_continuous_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let spec = CopulaSpec::bivariate(0.5).with_discretization(0, CutoffVector::new(vec![-0.4, 0.7]).unwrap());
    write_csv(&csv, &["t", "y"], &sample_copula(&spec, 10_000, 4).unwrap());
    let report = ok_report(&mixcor(&["estimate", "--data", path_str(&csv), "--out-dir", path_str(dir.path())]));
    assert_eq!(report["d"], 2);
    let m = read_matrix(&dir.path().join("correlation.tsv"));
    assert!((m[(0, 1)] - 0.5).abs() < 0.05);
    let entries = fs::read_to_string(dir.path().join("entries.tsv")).unwrap();
    assert!(entries.contains("ordinal3_continuous:tau_a"));
}

#[test]
fn empty_file_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "").unwrap();
    let out = mixcor(&["estimate", "--data", path_str(&csv), "--out-dir", path_str(dir.path())]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["stage"], "read data");
}

#[test]
fn graph_on_independent_data_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let spec = CopulaSpec::gaussian(DMatrix::identity(4, 4));
    write_csv(&csv, &["a", "b", "c", "d"], &sample_copula(&spec, 2000, 9).unwrap());
    let report = ok_report(&mixcor(&["graph", "--data", path_str(&csv), "--out-dir", path_str(dir.path())]));
    assert_eq!(report["edges"], 0);
    let edges = fs::read_to_string(dir.path().join("edges.tsv")).unwrap();
    assert_eq!(edges.lines().count(), 1);
    let trace = fs::read_to_string(dir.path().join("hbic_trace.tsv")).unwrap();
    assert_eq!(trace.lines().count(), 11);
    assert!(fs::read_to_string(dir.path().join("graph.dot")).unwrap().starts_with("graph mixcor {"));
}

#[test]
fn graph_agrees_with_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let omega: DMatrix<f64> = DMatrix::from_fn(4, 4, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => 0.4,
        _ => 0.0,
    });
    let sigma: DMatrix<f64> = omega.try_inverse().unwrap();
    let scale = DMatrix::from_fn(4, 4, |i, j| sigma[(i, j)] / (sigma[(i, i)] * sigma[(j, j)]).sqrt());
    let spec = CopulaSpec::gaussian(scale).with_discretization(1, CutoffVector::new(vec![0.2]).unwrap());
    let data = sample_copula(&spec, 1500, 2).unwrap();
    write_csv(&csv, &["a", "b", "c", "d"], &data);
    let report = ok_report(&mixcor(&["graph", "--data", path_str(&csv), "--out-dir", path_str(dir.path())]));

    let specs = infer_column_specs(&data, &[]);
    let est = estimate_latent_correlation(&data, &specs, TauVariant::TauA).unwrap();
    let precision = select_hbic(&project_psd(&est.matrix, 1e-8), 1500, &GlassoConfig::default()).unwrap();
    assert_eq!(report["chosen_lambda"].as_f64().unwrap(), precision.chosen_lambda);
    assert_eq!(report["edges"].as_u64().unwrap() as usize, precision.edges.len());
    let omega_cli = read_matrix(&dir.path().join("precision.tsv"));
    assert!((omega_cli - precision.omega).abs().max() < 1e-9);
}

#[test]
fn simulate_scenario_one_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| vec!["simulate".to_string(), "1".into(), "--reps".into(), "2".into(), "--n".into(), "40".into(), "--seed".into(), "7".into(), "--out-dir".into(), d.display().to_string()];
    for d in [a.path(), b.path()] {
        let argv = args(d);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        ok_report(&mixcor(&argv));
    }
    let first = fs::read(a.path().join("scenario1.tsv")).unwrap();
    assert_eq!(first, fs::read(b.path().join("scenario1.tsv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    let labels: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(labels.len(), 16);
    assert!(labels.contains("continuous"));
}

#[test]
fn manifest_overrides_and_unsupported_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let spec = CopulaSpec::gaussian(DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 1.0, 0.1, 0.2, 0.1, 1.0]))
        .with_discretization(0, CutoffVector::equal_mass(4))
        .with_discretization(1, CutoffVector::equal_mass(4));
    write_csv(&csv, &["u", "v", "w"], &sample_copula(&spec, 800, 1).unwrap());
    let data = path_str(&csv);
    let out_dir = path_str(dir.path());

    let out = mixcor(&["estimate", "--data", data, "--out-dir", out_dir]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["stage"], "estimate");

    let report = ok_report(&mixcor(&["estimate", "--data", data, "--out-dir", out_dir, "--allow-partial"]));
    assert_eq!(report["missing_entries"], 1);
    assert!(read_matrix(&dir.path().join("correlation.tsv"))[(0, 1)].is_nan());

    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "# override\nv = continuous\n@tau = b\n").unwrap();
    let report = ok_report(&mixcor(&["estimate", "--data", data, "--manifest", path_str(&manifest), "--out-dir", out_dir]));
    assert_eq!(report["tau"], "tau_b");
    assert_eq!(report["missing_entries"], 0);
    let entries = fs::read_to_string(dir.path().join("entries.tsv")).unwrap();
    assert!(entries.contains("ordinal4_continuous"));
}
