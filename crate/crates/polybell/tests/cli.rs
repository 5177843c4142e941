use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::process::Command;

use polybell::cli::run;
use polybell::io::write_counts;
use polybell_core::analysis::CountData;
use polybell_core::bell::{cglmp_iprime, named, CorrelationTable};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_polybell");

fn ok(args: &[&str]) -> String {
    let out = run(std::iter::once("polybell").chain(args.iter().copied()));
    assert_eq!(out.code, 0, "{args:?}: {}{}", out.stdout, out.stderr);
    out.stdout
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let v: Value = serde_json::from_str(&ok(&all)).unwrap();
    assert_eq!(v["ok"], true);
    v
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["polybell", "frobnicate"],
        vec!["polybell", "bound", "--expr", "I3", "--class", "restricted"],
        vec!["polybell", "bound", "--expr", "nope"],
        vec!["polybell", "bound", "--expr", "I3", "--level", "0"],
        vec!["polybell", "bound"],
    ] {
        let out = run(args.clone());
        assert_eq!(out.code, 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(run(["polybell", "--help"]).code, 0);
}

#[test]
fn local_and_ns_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("iprime.json");
    fs::write(&path, serde_json::to_string(&cglmp_iprime(3).unwrap()).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["bound", "--expr-file", p, "--class", "local", "--direction", "min"]);
    assert_eq!(v["results"]["value"], 1.0);
    let text = ok(&["bound", "--expr", "I3", "--class", "ns", "--n", "2"]);
    assert!(text.contains(": 0.5\n"), "{text}");
}

#[test]
fn restricted_bound_and_fallback_note() {
    let v = json(&["bound", "--expr", "I3", "--class", "restricted", "--n", "2", "--level", "2"]);
    let value = v["results"]["value"].as_f64().unwrap();
    assert!((value - 0.20711).abs() < 1e-4);
    assert_eq!(v["results"]["restrictions"], 81);
    assert_eq!(v["config"]["level"], "2");
    assert!(v["config"]["level_note"].is_null());
    assert!(v["timing_seconds"].as_f64().unwrap() >= 0.0);

    let text = ok(&["bound", "--expr", "I3", "--class", "quantum", "--level", "1+ab"]);
    assert!(text.contains("0.30495"), "{text}");
}

#[test]
fn seesaw_is_deterministic_and_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.json");
    let o = out.to_str().unwrap();
    let a = json(&["seesaw", "--expr", "CH", "--restarts", "3", "--seed", "5", "--out", o]);
    let b = json(&["seesaw", "--expr", "CH", "--restarts", "3", "--seed", "5"]);
    assert_eq!(a["results"], b["results"]);
    let value = a["results"]["value"].as_f64().unwrap();
    assert!((value - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);
    let model: polybell_core::model::QuantumModel = polybell::io::read_json(&out).unwrap();
    assert!((named("CH").unwrap().evaluate(&polybell_core::model::correlations_of(&model).unwrap()).unwrap() - value).abs() < 1e-9);
}

#[test]
fn visibility_for_dichotomic_i3() {
    let v = json(&["visibility", "--expr", "I3", "--n", "2", "--restarts", "4"]);
    let t = v["results"]["visibility"]["threshold"].as_f64().unwrap();
    assert!((t - 0.90).abs() < 0.01, "{t}");
    assert_eq!(v["results"]["visibility"]["orientation"], "exceeds");
}

#[test]
fn evaluate_counts_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    let ch = named("CH").unwrap();
    let table = CorrelationTable::uniform(ch.scenario().clone());
    let data = CountData::sample(&table, 4000, 11);
    write_counts(fs::File::create(&path).unwrap(), &data).unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["evaluate", "--expr", "CH", "--counts", p, "--bound-value", "0"]);
    let value = v["results"]["value"].as_f64().unwrap();
    let sigma = v["results"]["sigma"].as_f64().unwrap();
    assert!(sigma > 0.0 && (value - ch.evaluate(&table).unwrap()).abs() < 5.0 * sigma);
    let v = json(&["evaluate", "--expr", "CH", "--counts", p, "--bound-class", "local"]);
    assert_eq!(v["results"]["bound"]["value"], 0.0);

    fs::write(&path, "x,y\n1,2\n").unwrap();
    assert_eq!(run(["polybell", "evaluate", "--expr", "CH", "--counts", p, "--bound-value", "0"]).code, 2);
}

#[test]
fn computation_failure_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    fs::write(&path, "a_setting,b_setting,a_outcome,b_outcome,count\n").unwrap();
    let out = run(["polybell", "evaluate", "--expr", "CH", "--counts", path.to_str().unwrap(), "--bound-value", "0"]);
    assert_eq!(out.code, 1);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert!(v["error"].as_str().unwrap().len() > 3);
}

#[test]
fn expr_export_round_trips() {
    let text = ok(&["expr", "--name", "AN"]);
    let an: polybell_core::bell::BellExpression = serde_json::from_str(&text).unwrap();
    assert_eq!(an.scenario().a_outcomes(), &[4, 4, 4]);
    assert_eq!(an.joint_terms().len(), 144);
    let v = json(&["bound", "--expr", "AN", "--class", "local"]);
    assert!((v["results"]["value"].as_f64().unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn external_solver_handoff() {
    let dir = tempfile::tempdir().unwrap();
    let shim = dir.path().join("shim.sh");
    fs::write(&shim, format!("#!/bin/sh\nPOLYBELL_SOLVER=ipm exec \"{BIN}\" sdp --problem \"$1\" --out \"$2\" --tol \"$POLYBELL_TOL\"\n")).unwrap();
    fs::set_permissions(&shim, fs::Permissions::from_mode(0o755)).unwrap();
    let out = Command::new(BIN)
        .args(["--json", "bound", "--expr", "CH", "--class", "quantum", "--level", "1"])
        .env("POLYBELL_SOLVER", format!("external:{}", shim.display()))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["config"]["solver"].as_str().unwrap().starts_with("external:"));
    let value = v["results"]["value"].as_f64().unwrap();
    assert!((value - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);

    let bad = Command::new(BIN)
        .args(["bound", "--expr", "CH", "--class", "quantum"])
        .env("POLYBELL_SOLVER", "cplex")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
