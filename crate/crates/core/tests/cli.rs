mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curvscale"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SPHERE_FLAT: &str = r#"{"dimension": 2, "domain": {"kind": "sphere", "curvature": 1.0},
    "target": {"kind": "euclidean"}, "basis_degree": 5, "seed": 7}"#;

#[test]
fn limit_equal_forms_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dimension": 3, "domain": {"kind": "hyperbolic", "curvature": -0.5},
            "target": {"kind": "hyperbolic", "curvature": -0.5}, "basis_degree": 3}"#,
    );
    let out = dir.path().join("limit.json");
    let o = run(&["limit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert!(v["m_star"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(v["Q_star"].as_array().unwrap().len(), 9);
}

#[test]
fn limit_sphere_flat_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SPHERE_FLAT);
    let o = run(&["limit", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = v["m_star"].as_f64().unwrap();
    assert!((m - common::limit_fixture("n2_sphere1_euclidean")).abs() <= 1e-9, "{m}");
    assert_eq!(v["gauge_check"]["passed"], true);
    assert_eq!(v["homogeneity_check"]["passed"], true);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["m_per_degree"].as_array().unwrap().len(), 5);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SPHERE_FLAT.replace("\"seed\": 7", "\"seed\": 7, \"q_search\": {\"grid_size\": -8}");
    let cfg = write_config(dir.path(), "c.json", &bad);
    for sub in ["limit", "scaling", "check"] {
        let out = dir.path().join(format!("{sub}.out"));
        let o = run(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
        assert_eq!(code(&o), 2, "{sub}");
        assert!(!out.exists());
        assert!(!o.stderr.is_empty());
    }
    let cfg = write_config(dir.path(), "d.json", &SPHERE_FLAT.replace("\"seed\": 7", "\"sed\": 7"));
    assert_eq!(code(&run(&["limit", "--config", cfg.to_str().unwrap()], &[])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["check", "--config", missing.to_str().unwrap()], &[])), 2);
    assert_eq!(code(&run(&["bogus"], &[])), 2);
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SPHERE_FLAT);
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["limit", "--config", c], &[("CURVSCALE_THREADS", "zero")])), 2);
    assert_eq!(code(&run(&["limit", "--config", c], &[("CURVSCALE_THREADS", "1")])), 0);
}

#[test]
fn check_passes_and_mutation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SPHERE_FLAT);
    let out = dir.path().join("check.json");
    let o = run(&["check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["equality_family"]["max_deviation"].as_f64().unwrap() <= 1e-10);

    let flipped = SPHERE_FLAT.replace("\"seed\": 7", "\"seed\": 7, \"check\": {\"flip_curvature_sign\": true}");
    let cfg = write_config(dir.path(), "flip.json", &flipped);
    let o = run(&["check", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let orders: Vec<f64> = v["metric_expansion"]["manifolds"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|m| m["order"].as_f64())
        .collect();
    assert!(orders.iter().any(|o| (o - 2.0).abs() < 0.2), "{orders:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("violation"));
}

#[test]
fn scaling_writes_csv_and_sidecar_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"dimension": 2, "domain": {"kind": "sphere", "curvature": 1.0},
        "target": {"kind": "euclidean"}, "h_list": [0.4, 0.3, 0.2, 0.15],
        "mesh_refinement": 1, "max_refinement": 2, "optimizer": {"restarts": 1}, "seed": 3}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let o = run(&["scaling", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(&out).unwrap();
        let side = std::fs::read_to_string(out.with_extension("json")).unwrap();
        outputs.push((csv, side));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (csv, side) = &outputs[0];
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,E_min,E_over_h4,iters,grad_norm,status"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[1].contains('e') && fields[1].split('e').next().unwrap().len() == 18, "{row}");
        assert_eq!(fields[5], "converged");
    }
    let v: serde_json::Value = serde_json::from_str(side).unwrap();
    for key in ["exponent", "prefactor", "mbar", "relative_gap", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }

    let dir2 = tempfile::tempdir().unwrap();
    let cfg2 = write_config(dir2.path(), "c.json", body);
    let out = dir2.path().join("other.csv");
    let mt = run(&["scaling", "--config", cfg2.to_str().unwrap(), "--out", out.to_str().unwrap()], &[("CURVSCALE_THREADS", "1")]);
    assert_eq!(code(&mt), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), outputs[0].0);
}

#[test]
fn scaling_equal_forms_rows_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"dimension": 2, "domain": {"kind": "hyperbolic", "curvature": -1.0},
        "target": {"kind": "hyperbolic", "curvature": -1.0}, "h_list": [0.4, 0.3, 0.2, 0.1],
        "mesh_refinement": 1}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let out = dir.path().join("eq.csv");
    let o = run(&["scaling", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    for row in csv.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert!(fields[1].parse::<f64>().unwrap() <= 1e-14);
        assert_eq!(fields[5], "exact");
    }
    let v = json(&out.with_extension("json"));
    assert!(v["exponent"].is_null());

    let no_out = run(&["scaling", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(code(&no_out), 2);
}
