use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn lab(args: &[&str], config: Option<&Value>, threads: Option<&str>) -> (Output, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_transport-lab"));
    cmd.args(args);
    if let Some(c) = config {
        let path = dir.path().join("config.json");
        fs::write(&path, c.to_string()).unwrap();
        cmd.arg("--config").arg(path);
    }
    match threads {
        Some(t) => cmd.env("TRANSPORT_LAB_THREADS", t),
        None => cmd.env_remove("TRANSPORT_LAB_THREADS"),
    };
    (cmd.output().unwrap(), dir)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn small_norm() -> Value {
    json!({"norm": {"indicators": 5, "indicator_cells": 200, "random_functions": 4, "random_nodes": 65}})
}

fn small_stability() -> Value {
    json!({"stability": {
        "comparator": {"steps": [200, 400]},
        "quant": {"seeds": 1, "grid": {"nx": 64, "ny": 64, "nt": 8}, "mollifier": {"radius": 0.1, "order": 4}},
        "ladder": {"rungs": 3}
    }})
}

fn check<'a>(record: &'a Value, name: &str) -> &'a Value {
    record["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn norm_default_request_matches_closed_form() {
    let (o, _d) = lab(&["norm"], Some(&small_norm()), None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["artifact"], "transport-lab");
    assert_eq!(r["passed"], true);
    let norm = r["record"]["requests"][0]["norm"].as_f64().unwrap();
    assert!((norm - 4.328085).abs() < 1e-6, "{norm}");
}

#[test]
fn zero_function_has_zero_norm() {
    let mut c = small_norm();
    c["norm"]["requests"] = json!([{
        "function": {"kind": "samples", "values": [0.0, 0.0, 0.0, 0.0], "length": 1.0},
        "young": {"kind": "zygmund", "r": 1.0, "s": 1.0},
        "expected": 0.0
    }]);
    let (o, _d) = lab(&["norm"], Some(&c), None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout_json(&o)["record"]["requests"][0]["norm"], 0.0);
}

#[test]
fn wrong_expected_value_fails_by_name() {
    let mut c = small_norm();
    c["norm"]["requests"] = json!([{
        "function": {"kind": "indicator", "value": 3.0, "measure": 1.0},
        "young": {"kind": "sub_exp", "gamma": 0.0},
        "expected": 4.0
    }]);
    let (o, _d) = lab(&["norm"], Some(&c), None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("invariant failed: request[0].expected"), "{}", stderr(&o));
}

#[test]
fn config_and_usage_errors_exit_2() {
    let (o, _d) = lab(&["counterexample", "--gamma", "0.5"], None, None);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let (o, _d) = lab(&["norm"], Some(&json!({"norm": {"colour": 1}})), None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    let (o, _d) = lab(&["norm"], Some(&json!({"schema_version": 2})), None);
    assert_eq!(code(&o), 2);
    let (o, _d) = lab(&["norm", "--grid", "64,64,8"], None, None);
    assert_eq!(code(&o), 2);
    let (o, _d) = lab(&["solver", "--grid", "64,32,8"], None, None);
    assert_eq!(code(&o), 2);
    let (o, _d) = lab(&["frobnicate"], None, None);
    assert_eq!(code(&o), 2);
    let (o, _d) = lab(&["norm"], Some(&small_norm()), Some("many"));
    assert_eq!(code(&o), 2);
}

#[test]
fn too_coarse_grid_is_a_config_error() {
    let c = json!({"solver": {
        "apriori": {"seeds": 1, "grid": {"nx": 32, "ny": 32, "nt": 4}},
        "commutator": {"families": []}
    }});
    let (o, _d) = lab(&["solver"], Some(&c), None);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("resolution"), "{}", stderr(&o));
}

#[test]
fn increasing_ladder_radii_fail_the_commutator_check() {
    let c = json!({"solver": {
        "apriori": {"seeds": 0},
        "conservation": {"grid": {"nx": 64, "ny": 64, "nt": 4}, "mollifier": {"radius": 0.1, "order": 4}, "tolerance": 1e-3},
        "product": {"seeds": 0},
        "commutator": {"families": [{
            "name": "backwards",
            "field": {"kind": "smooth_shear", "amplitude": 1.0},
            "radii": [0.05, 0.1],
            "grid": {"nx": 81, "ny": 81, "nt": 8},
            "horizon": 0.25
        }]}
    }});
    let (o, _d) = lab(&["solver"], Some(&c), None);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).ends_with("invariant failed: commutator.backwards\n"), "{}", stderr(&o));
}

#[test]
fn divergence_free_margin_equals_the_allowance() {
    let (o, _d) = lab(&["stability"], Some(&small_stability()), None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(check(&r, "quant.divergence_free")["passed"], true);
    for row in r["record"]["divergence_free"].as_array().unwrap() {
        let (m, e) = (row["margin"].as_f64().unwrap(), row["expected_margin"].as_f64().unwrap());
        assert!(e > 0.0 && (m - e).abs() <= 1e-6, "{m} vs {e}");
    }
}

#[test]
fn distinct_thetas_give_distinct_solutions() {
    let c = json!({"counterexample": {"profile": "demo", "battery_size": 2}});
    let (o, _d) = lab(&["counterexample", "--thetas", "0,1"], Some(&c), None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = stdout_json(&o);
    let d = r["record"]["nonuniqueness"]["distance_matrix"][0][1].as_f64().unwrap();
    assert!(d > 0.0);
    assert_eq!(check(&r, "distance[0,1]")["passed"], true);
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "config.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_reproducible_across_thread_counts() {
    let c = small_stability();
    let run = |threads| {
        let out = tempfile::tempdir().unwrap();
        let (o, _d) = lab(&["stability", "--out", out.path().to_str().unwrap()], Some(&c), Some(threads));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        outputs(out.path())
    };
    let one = run("1");
    let four = run("4");
    assert!(one.len() > 1);
    assert_eq!(one, four);
    for (name, bytes) in &one {
        if name.ends_with(".csv") {
            let text = String::from_utf8(bytes.clone()).unwrap();
            let mut lines = text.lines();
            assert!(lines.next().unwrap().starts_with("# transport-lab "), "{name}");
            assert!(lines.next().unwrap().starts_with("# config: {"), "{name}");
        }
    }
}

#[test]
fn seed_flag_changes_the_draws_but_not_the_verdict() {
    let base = small_norm();
    let (a, _d) = lab(&["norm"], Some(&base), None);
    let (b, _d) = lab(&["norm", "--seed", "11"], Some(&base), None);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let (a, b) = (stdout_json(&a), stdout_json(&b));
    assert_eq!(b["config"]["seed"], 11);
    assert_ne!(a["record"]["lemma"], b["record"]["lemma"]);
}
