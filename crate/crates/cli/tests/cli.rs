use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn sinai(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinai")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = sinai(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn digest(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn small_env(dir: &Path, name: &str, n: &str, seed: &str) {
    ok(&["gen-env", "--kappa", "3", "--n", n, "--seed", seed, "-o", name], dir);
}

#[test]
fn gen_env_writes_sites_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["gen-env", "--law", "bernoulli", "--rho", "2.718", "--kappa", "2.718", "--n", "100000", "--seed", "7"];
    ok(&[&args[..], &["-o", "a.json"]].concat(), d);
    ok(&[&args[..], &["-o", "b.json"]].concat(), d);
    let env = read_json(&d.join("a.json"));
    assert_eq!(env["schema"], 1);
    assert_eq!(env["sites"].as_array().unwrap().len(), 100_000);
    assert_eq!(digest(&d.join("a.json")), digest(&d.join("b.json")));

    let manifest = read_json(&d.join("a.json.manifest.json"));
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["n"], 100_000);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap(), digest(&d.join("a.json")));
}

#[test]
fn bad_kappa_exits_with_configuration_code() {
    let dir = TempDir::new().unwrap();
    let out = sinai(&["gen-env", "--kappa", "1", "--n", "10", "-o", "e.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Condition B"));
}

#[test]
fn table_law_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("t.json"), r#"[{"wp":2.0,"wm":0.5,"prob":0.5},{"wp":0.5,"wm":2.0,"prob":0.5}]"#).unwrap();
    ok(&["gen-env", "--law", "table", "--table", "t.json", "--kappa", "2", "--n", "50", "-o", "e.json"], d);
    ok(&["analyze", "--env", "e.json", "--lnt", "0.5"], d);
    let drift = r#"[{"wp":2.0,"wm":0.5,"prob":1.0}]"#;
    std::fs::write(d.join("bad.json"), drift).unwrap();
    let out = sinai(&["gen-env", "--law", "table", "--table", "bad.json", "--kappa", "2", "--n", "50", "-o", "x.json"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_worked_path() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["analyze", "--values", "0,-3,1,-5,2", "--lnt", "2", "--gamma", "2"], dir.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["zeta"], 2.0);
    assert_eq!(report["stable"]["minima"], serde_json::json!([1, 3]));
}

#[test]
fn analyze_cascade_and_diagnostics() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        &[
            "analyze", "--brownian", "--step", "0.01", "--length", "400000", "--seed", "4", "--lnt", "4", "--gamma", "3",
            "--cascade", "--diagnostics", "-o", "a.json",
        ],
        d,
    );
    let report = read_json(&d.join("a.json"));
    let cascade = &report["cascade"];
    let n = cascade["N"].as_u64().unwrap() as usize;
    let a = cascade["a"].as_array().unwrap();
    assert!(n >= 1 && a.len() >= n);
    assert!(a.windows(2).all(|w| w[0].as_f64().unwrap() < w[1].as_f64().unwrap()));
    assert!((cascade["zeta"].as_f64().unwrap() - report["zeta"].as_f64().unwrap()).abs() < 1e-12);
    let metrics = report["diagnostics"]["metrics"].as_object().unwrap();
    assert_eq!(metrics.len(), 5);
    assert!(d.join("a.json.manifest.json").exists());
}

#[test]
fn analyze_short_path_is_a_horizon_failure() {
    let dir = TempDir::new().unwrap();
    let out = sinai(&["analyze", "--values", "0,-1,0.5", "--lnt", "3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn simulate_csv_contract() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_env(d, "e.json", "200", "1");
    ok(&["simulate", "--env", "e.json", "--t-grid", "0,1,4", "--replicas", "500", "-o", "s.csv"], d);
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,p,stderr,n_replicas"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(first[3], "500");

    let out = sinai(&["simulate", "--env", "e.json", "--t-grid", "0,1,4", "--t-max", "2", "-o", "x.csv"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_env(d, "e.json", "200", "1");
    let base = ["simulate", "--env", "e.json", "--gamma", "3", "--lnt-grid", "0,1,2", "--replicas", "400", "--seed", "9"];
    ok(&[&base[..], &["--workers", "1", "-o", "a.csv"]].concat(), d);
    ok(&[&base[..], &["--workers", "3", "-o", "b.csv"]].concat(), d);
    assert_eq!(digest(&d.join("a.csv")), digest(&d.join("b.csv")));
}

#[test]
fn coalescing_matches_meeting_for_two_walks() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_env(d, "e.json", "300", "2");
    let common = ["simulate", "--env", "e.json", "--gamma", "2", "--t-grid", "0,10,100", "--replicas", "4000"];
    ok(&[&common[..], &["--mode", "meeting", "--seed", "1", "-o", "m.csv", "--dump", "m.json"]].concat(), d);
    ok(&[&common[..], &["--mode", "coalescing", "--seed", "2", "-o", "c.csv", "--dump", "c.json"]].concat(), d);
    let times = |f: &str| -> Vec<f64> {
        read_json(&d.join(f))["outcomes"].as_array().unwrap().iter().map(|o| o["time"].as_f64().unwrap()).collect()
    };
    let r = sinai_core::lawcheck::ks_two_sample(&times("m.json"), &times("c.json"), 0.01).unwrap();
    assert!(r.passed, "p = {}", r.p_value);
    let manifest = read_json(&d.join("m.csv.manifest.json"));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn exact_reports_probabilities_and_exponents() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_env(d, "e.json", "200", "3");
    let out = ok(&["exact", "--env", "e.json", "--lnt-grid", "1,2,3", "--L", "100", "--tol", "1e-8"], d);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    let p: Vec<f64> = records.iter().map(|r| r["p"].as_f64().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[0] >= w[1]));
    assert!(records.iter().all(|r| r["e"].as_f64().unwrap() > 0.0 && r["L"] == 100));

    let out = sinai(&["exact", "--env", "e.json", "--lnt-grid", "1", "--L", "150", "--gamma", "4"], d);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn theorem1_series_schema() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        &[
            "experiment", "theorem1", "--kappa", "2.718281828459045", "--n-sites", "400", "--n-envs", "2",
            "--lnt-grid", "2,3", "--L", "120", "--tol", "1e-8", "-o", "t1.json",
        ],
        d,
    );
    let report = read_json(&d.join("t1.json"));
    assert_eq!(report["schema"], 1);
    let envs = report["environments"].as_array().unwrap();
    assert_eq!(envs.len(), 2);
    for env in envs {
        for point in env["series"].as_array().unwrap() {
            for key in ["t", "e", "zeta"] {
                assert!(point[key].is_number(), "missing {key}");
            }
        }
    }
    assert_eq!(report["summary"].as_array().unwrap().len(), 2);

    let out = sinai(&["experiment", "theorem1", "--kappa", "3", "--n-envs", "1", "--L", "5000"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lower --L"));
}

#[test]
fn theorem3_embeds_gof_reports() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        &["experiment", "theorem3", "--gamma", "2", "--paths", "200", "--lnt", "2,3", "--step", "0.01", "-o", "t3.json"],
        d,
    );
    let report = read_json(&d.join("t3.json"));
    let rep = &report["repetitions"][0];
    for k in 0..2 {
        let gof = &rep["per_lnt"][k]["gof"];
        assert_eq!(gof["n"], 200);
        assert!(gof["p_value"].is_number());
        assert!(rep["per_lnt"][k]["min_zeta"].as_f64().unwrap() >= 1.0);
    }
    assert!(rep["two_sample"]["p_value"].is_number());
    assert!(report["passed_two_sample"].is_number());
}
