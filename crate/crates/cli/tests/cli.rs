use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SPHERE: &str = r#"
[domain]
n = 1
l = 2
rho = "m0^2 + m1^2"
u = "0"

[point]
moduli = 0.6, 0.8

[quadrature]
nodes = 32

[run]
k_min = 10
k_max = 40
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn szego(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_szego"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    szego(&args)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

#[test]
fn validate_accepts_the_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let o = run("validate", &cfg, dir.path(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout_json(&o)["passed"], Value::Bool(true));
}

#[test]
fn validate_reports_monotonicity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[domain]\nn = 1\nl = 2\nrho = \"m0^2 - m1^2\"\n",
    );
    let o = run("validate", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let failures = stdout_json(&o)["failures"].clone();
    assert!(failures
        .as_array()
        .unwrap()
        .contains(&Value::String("monotonicity".into())));
}

#[test]
fn malformed_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        "[domain\nn = 1",
        "[domain]\nn = 1\nl = 2\nrho = \"m0^2 + \"\n",
        "[domain]\nn = one\n",
        "[domain]\nn = 1\nl = 2\nrho = \"m0^2 + m1^2\"\n[run]\nk_min = 5\nk_max = 2\n",
    ] {
        let cfg = write_config(dir.path(), bad);
        let o = run("validate", &cfg, dir.path(), &[]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
    assert_eq!(szego(&["frobnicate"]).status.code(), Some(2));
    let missing = dir.path().join("absent.cfg");
    assert_eq!(
        run("norms", &missing, dir.path(), &[]).status.code(),
        Some(2)
    );
}

#[test]
fn sphere_norm_table_matches_factorial_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let o = run("norms", &cfg, dir.path(), &["--k-min", "2", "--k-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("norms_boundary_k2.csv")).unwrap();
    assert!(text.contains("# config_hash: "));
    assert!(text.contains("# tool_version: "));
    assert!(text.contains("# complete: true"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "j0,j1,log_norm,rel_err");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let (j0, j1): (u32, u32) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let expected = (2.0 * PI * PI).ln() + ln_factorial(j0) + ln_factorial(j1) - ln_factorial(3);
        let got: f64 = f[2].parse().unwrap();
        assert!((got - expected).abs() < 1e-12, "{row}");
    }
}

#[test]
fn rerun_reuses_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let args = ["--k-min", "3", "--k-max", "5"];
    assert_eq!(run("norms", &cfg, dir.path(), &args).status.code(), Some(0));
    let path = dir.path().join("norms_boundary_k4.csv");
    let first = fs::read(&path).unwrap();
    let stamp = fs::metadata(&path).unwrap().modified().unwrap();

    let again = run("norms", &cfg, dir.path(), &args);
    assert!(String::from_utf8_lossy(&again.stderr).contains("cached"));
    assert_eq!(fs::read(&path).unwrap(), first);
    assert_eq!(fs::metadata(&path).unwrap().modified().unwrap(), stamp);

    // a different quadrature invalidates the cache
    let other = run(
        "norms",
        &cfg,
        dir.path(),
        &["--k-min", "4", "--k-max", "4", "--nodes", "48"],
    );
    assert!(String::from_utf8_lossy(&other.stderr).contains("computed"));
    assert_ne!(fs::read(&path).unwrap(), first);
}

#[test]
fn both_routes_write_a_consistency_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let o = run(
        "norms",
        &cfg,
        dir.path(),
        &["--k-min", "2", "--k-max", "4", "--route", "both"],
    );
    assert_eq!(o.status.code(), Some(0));
    for k in 2..=4 {
        assert!(dir.path().join(format!("norms_boundary_k{k}.csv")).exists());
        assert!(dir
            .path()
            .join(format!("norms_projective_k{k}.csv"))
            .exists());
    }
    let summary = fs::read_to_string(dir.path().join("norms_consistency.csv")).unwrap();
    let worst = summary
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{summary}");
}

#[test]
fn verify_recovers_sphere_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let o = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_boundary.json")).unwrap())
            .unwrap();
    for key in [
        "ks",
        "pi_values",
        "fitted_power",
        "fitted_a0",
        "fitted_a1",
        "closed_a0",
        "closed_a1",
        "rel_err_a0",
        "rel_err_a1",
        "residual_curve",
        "warnings",
        "config_hash",
        "tool_version",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report["rel_err_a0"].as_f64().unwrap() <= 1e-6);
    assert!(report["warnings"][0].as_str().unwrap().contains("k^n"));

    let csv = fs::read_to_string(dir.path().join("verify_boundary.csv")).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("k,pi_k,a0*k^n + a1*k^(n-1),residual"));
    assert_eq!(rows.count(), 31);
}

#[test]
fn interior_point_reports_rescale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SPHERE.replace("0.6, 0.8", "0.3, 0.4"));
    let o = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_boundary.json")).unwrap())
            .unwrap();
    let rescale = &report["interior_rescale"];
    assert!((rescale["rho"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!((rescale["log_factor_per_k"].as_f64().unwrap() - 0.25f64.ln()).abs() < 1e-15);
    let re = rescale["projection_re"].as_array().unwrap();
    assert!((re[0].as_f64().unwrap() - 0.6).abs() < 1e-15);
    assert!((re[1].as_f64().unwrap() - 0.8).abs() < 1e-15);

    // the kernel at the interior point carries the factor rho^(2k/l)
    let o = run(
        "szego",
        &cfg,
        dir.path(),
        &["--k-min", "10", "--k-max", "10"],
    );
    let out = stdout_json(&o);
    let at_point = out["routes"][0]["pi_k"][0].as_f64().unwrap();
    let expected = 0.25f64.powi(10) * 11.0 / (2.0 * PI * PI);
    assert!((at_point / expected - 1.0).abs() < 1e-12);
}

#[test]
fn coefficients_of_the_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let o = run("coeffs", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout_json(&o);
    let expected = 1.0 / (2.0 * PI * PI);
    assert!((out["a0"].as_f64().unwrap() / expected - 1.0).abs() < 1e-12);
    assert!((out["a1"].as_f64().unwrap() / expected - 1.0).abs() < 1e-10);
}

#[test]
fn point_outside_the_domain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SPHERE.replace("0.6, 0.8", "1.6, 0.8"));
    assert_eq!(run("coeffs", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn failed_thresholds_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let strict = SPHERE.replace("k_max = 40", "k_max = 40\na1_tol = 1e-20\n");
    let cfg = write_config(dir.path(), &strict);
    let o = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_boundary.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], Value::Bool(false));
}

#[test]
fn unresolved_quadrature_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[domain]\nn = 1\nl = 4\nrho = \"m0^4 + m1^4\"\n\
         [quadrature]\nnodes = 8\nrefinement_levels = 1\ntarget_rel_tol = 1e-15\n\
         [run]\nk_min = 40\nk_max = 40\n",
    );
    let o = run("norms", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let text = fs::read_to_string(dir.path().join("norms_boundary_k40.csv")).unwrap();
    assert!(text.contains("# complete: false"));
}
