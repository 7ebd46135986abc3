use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn run(cmd: &str, config: &str, extra: &[&str]) -> (Output, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_halfline"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, dir)
}

fn json(dir: &TempDir, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("out").join(name)).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn scatter_finds_the_sech_eigenvalue() {
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9}, "datum": {"kind": "sech", "eta": 0.5, "x0": 12.0},
                  "grids": {"k": {"min": -5, "max": 5, "n": 41}}}"#;
    let (o, dir) = run("scatter", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spec = json(&dir, "spectrum.json");
    let zeros = spec["spectrum"].as_array().unwrap();
    assert_eq!(zeros.len(), 1);
    let k = &zeros[0]["k"];
    assert!(k[0].as_f64().unwrap().abs() < 1e-8 && (k[1].as_f64().unwrap() - 0.5).abs() < 1e-8, "{k}");
}

#[test]
fn zero_datum_gives_unit_a() {
    let (o, dir) = run("scatter", r#"{"background": {"a": 1.0, "omega": 0.9}, "grids": {"k": {"min": -2, "max": 2, "n": 5}}}"#, &[]);
    assert!(o.status.success());
    let rows = csv_rows(&dir.path().join("out/scattering.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == 1.0 && r[2] == 0.0 && r[3] == 0.0 && r[4] == 0.0));
}

#[test]
fn malformed_config_exits_with_two() {
    let (o, _d) = run("scatter", r#"{"background": {"a": 1.0}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let (o, _d) = run("scatter", r#"{"background": {"a": -1.0, "omega": 0.0}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _d) = run("oracle", r#"{"background": {"a": 1.0, "omega": 0.9}, "solver": {"defect_tol": 0.0}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_matches_closed_form_and_is_deterministic() {
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9}, "breather": {"eta": 0.5, "x0": 1.0, "epsilon": 0.2},
                  "grids": {"x": {"min": 0, "max": 2, "n": 41}, "t": {"min": 0, "max": 1, "n": 41}}}"#;
    let (o, dir) = run("oracle", cfg, &["--threads", "2"]);
    assert!(o.status.success());
    let p = halfline::exact::BreatherParams::new(0.5, 1.0, 0.2).unwrap();
    for r in csv_rows(&dir.path().join("out/breather.csv")) {
        let q = halfline::exact::breather(r[0], r[1], &p);
        assert!((q.re - r[2]).abs() < 1e-14 && (q.im - r[3]).abs() < 1e-14);
    }
    assert!(json(&dir, "oracle.json")["nls_residual"].as_f64().unwrap() < 1e-4);
    let (_, dir2) = run("oracle", cfg, &[]);
    for f in ["oracle.json", "breather.csv", "planewave.csv"] {
        assert_eq!(std::fs::read(dir.path().join("out").join(f)).unwrap(), std::fs::read(dir2.path().join("out").join(f)).unwrap());
    }
}

#[test]
fn solve_at_time_zero_reproduces_the_datum() {
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9}, "datum": {"kind": "gaussian", "amp": [0.4, 0.0], "width": 1.0},
                  "grids": {"x": {"min": 0, "max": 3, "n": 4}, "t": {"min": 0, "max": 0, "n": 1}}}"#;
    let (o, dir) = run("solve", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&dir, "field.json")["initial_data_error"].as_f64().unwrap() < 1e-6);
    // Data with a 1/k reflection tail are rejected for t > 0.
    let cfg = cfg.replace(r#""t": {"min": 0, "max": 0, "n": 1}"#, r#""t": {"min": 0, "max": 1, "n": 2}"#);
    let (o, _d) = run("solve", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn asymptotics_of_trivial_pair_reports_noise_floor() {
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9}, "grids": {"t": {"min": 0, "max": 2, "n": 3}}}"#;
    let (o, dir) = run("asymptotics", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir, "decay.json")["below_noise_floor"], Value::Bool(true));
}

#[test]
fn dtn_demo_window_and_branches() {
    let (o, _d) = run("dtn-demo", r#"{"background": {"a": 1.0, "omega": 0.3}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9}, "grids": {"t": {"min": 4, "max": 10, "n": 4}}}"#;
    let (o, dir) = run("dtn-demo", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("breather"));
    let r = json(&dir, "dtn.json");
    assert!(r["dirichlet_diff_final"]["rh"].as_f64().unwrap() < 1e-6);
    assert!(r["dirichlet_diff_final"]["breather"].as_f64().unwrap() < 1e-12);
    assert!((r["neumann_abs_final"]["rh"].as_f64().unwrap() - 0.4472).abs() < 1e-3);
    assert!((r["neumann_abs_final"]["breather"].as_f64().unwrap() - 0.8944).abs() < 1e-3);
}

#[test]
fn boundary_traces_of_a_rational_family() {
    let cfg = r#"{"background": {"a": 1.0, "omega": 0.9},
                  "free_ratio": {"poles": [[[0.7236, 2.5], [[1.5, 0.0]]], [[-0.2764, 3.0], [[-1.5, 0.0]]]], "poly": []},
                  "grids": {"t": {"min": 0, "max": 6, "n": 4}}}"#;
    let (o, dir) = run("boundary", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("out/boundary.csv"));
    let abs_u: Vec<f64> = rows.iter().map(|r| r[1].hypot(r[2])).collect();
    assert!(abs_u[0] > 1e-3 && abs_u[3] < 1e-3 * abs_u[0], "{abs_u:?}");
    // The Dirichlet trace approaches the plane wave a e^{2iωt}.
    let t = rows[3][0];
    assert!((rows[3][5] - (1.8 * t).cos()).abs() < 1e-4);
}
