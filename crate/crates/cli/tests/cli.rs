use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-hierarchy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn eval_levels_one_uniform() {
    let v = ok_json(&["--deterministic", "eval", &data("coins.json"), "--levels", "1"]);
    let cells = v["cells"].as_object().unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells.values().all(|p| p == "1/4"));
}

#[test]
fn eval_two_units_counterfactual_joint() {
    let v = ok_json(&[
        "--deterministic",
        "eval",
        &data("two_units.json"),
        "--levels",
        "3",
        "--interventions",
        "do X=1; do X=0",
    ]);
    let cells = v["cells"].as_object().unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells["11|01"], "1/2");
    assert_eq!(cells["10|00"], "1/2");
}

#[test]
fn eval_level_two_covers_all_interventions() {
    let v = ok_json(&["--deterministic", "eval", &data("coins.json"), "--levels", "2"]);
    assert_eq!(v["entries"].as_array().unwrap().len(), 9);
}

#[test]
fn deterministic_output_is_byte_identical() {
    let a = run(&["--deterministic", "canon", &data("two_units.json")]);
    let b = run(&["--deterministic", "canon", &data("two_units.json")]);
    assert_eq!(a.stdout, b.stdout);
    let stamped: Value = serde_json::from_slice(&run(&["canon", &data("two_units.json")]).stdout).unwrap();
    assert!(stamped.get("generated_at").is_some());
    let plain: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(plain.get("generated_at").is_none());
}

#[test]
fn check_two_units_is_good() {
    let v = ok_json(&["--deterministic", "check", &data("two_units_l2.json")]);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["good"], true);
    for m in v["margins"].as_array().unwrap() {
        assert_eq!(m["value"], "1/2");
    }
}

#[test]
fn pns_from_model() {
    let v = ok_json(&["--deterministic", "pns", &data("two_units.json")]);
    assert_eq!(v["pns"], "0");
    assert_eq!(v["pn"], "undefined");
}

#[test]
fn separate_two_units() {
    let v = ok_json(&["--deterministic", "separate", &data("two_units.json"), "--delta", "1/4"]);
    assert_eq!(v["verification"]["level2_equal"], true);
    assert_eq!(v["verification"]["interventions_checked"], 9);
    assert_eq!(v["verification"]["witness"], "pns");
    assert_eq!(v["verification"]["magnitude"], "1/4");
    assert_eq!(v["separated"]["units"].as_array().unwrap().len(), 4);
}

#[test]
fn separate_non_good_exits_4() {
    let out = run(&["separate", &data("deterministic.json")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("P(x', y') = 0"));
}

#[test]
fn invalid_model_exits_2_with_report() {
    let out = run(&["eval", &data("invalid_model.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sum to 5/4") && err.contains("missing 1 row"), "{err}");
}

#[test]
fn realize_infeasible_exits_3() {
    let out = run(&["realize", &data("infeasible_l2.json")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn realize_round_trips_through_check() {
    let v = ok_json(&["--deterministic", "realize", &data("two_units_l2.json")]);
    assert_eq!(v["order"], serde_json::json!(["X", "Y"]));
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(run(&["eval"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_pns_on_two_units() {
    let v = ok_json(&["--deterministic", "bounds", &data("pns_query.json")]);
    assert_eq!(v["lo"], "0");
    assert_eq!(v["hi"], "1/2");
    assert_eq!(v["collapsed"], false);
}

#[test]
fn collapse_monotonic_two_vars() {
    let l2 = ok_json(&["--deterministic", "eval", &data("deterministic.json"), "--levels", "2"]);
    let dir = std::env::temp_dir().join(format!("ch-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("det_l2.json");
    std::fs::write(&path, l2.to_string()).unwrap();
    let v = ok_json(&["--deterministic", "collapse", path.to_str().unwrap()]);
    assert_eq!(v["collapsed"], true);
    let v = ok_json(&["--deterministic", "collapse", &data("two_units_l2.json"), "--interventions", "do X=0; do X=1"]);
    assert_eq!(v["collapsed"], false);
}

#[test]
fn monotonic_formula() {
    let v = ok_json(&["--deterministic", "monotonic", "--order", "A,B", "--values", "1,1"]);
    assert!(!v["terms"].as_array().unwrap().is_empty());
    let v = ok_json(&["--deterministic", "monotonic", &data("two_units.json")]);
    assert!(v.get("value").is_some());
}

#[test]
fn split_l1_from_model() {
    let v = ok_json(&["--deterministic", "split-l1", &data("coins.json")]);
    assert_eq!(v["cell"], "00");
    assert_ne!(v["acausal"], v["causal"]);
}

#[test]
fn verify_is_seeded() {
    let args = [
        "--deterministic",
        "--seed",
        "11",
        "verify",
        &data("two_units.json"),
        "--n-grid",
        "10,1000",
        "--trials",
        "50",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["rows"][1]["rejections"], 50);
    let v = ok_json(&["--deterministic", "verify", &data("coins.json"), "--hypothesis", &data("hypothesis.json"), "--n-grid", "100", "--trials", "20"]);
    assert_eq!(v["constraints"], 2);
}

#[test]
fn output_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("ch-out-{}.json", std::process::id()));
    let out = run(&["--deterministic", "--output", path.to_str().unwrap(), "canon", &data("two_units.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"atoms\""));
}
