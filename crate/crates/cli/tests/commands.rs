use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_locc-forge");

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN)
        .args(args)
        .env_remove("LOCC_FORGE_SEED")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not json ({e}): {text}"))
}

fn fixture_file(dir: &Path, name: &str) -> PathBuf {
    let (code, text) = run(&["fixtures", "--name", name]);
    assert_eq!(code, 0);
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_eq1_six() {
    let (code, text) = run(&["fixtures", "--name", "eq1-six"]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert_eq!(v["dims"], serde_json::json!([2, 2, 2]));
    let labels: Vec<_> = v["states"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["psi1", "psi2", "psi3", "psi4", "psi5", "psi6"]);
}

#[test]
fn fixtures_custom_example1_pair() {
    let (code, text) = run(&[
        "fixtures",
        "--name",
        "example1",
        "--alpha",
        "[[1,0],[0,0]]",
        "--beta",
        "[[1,0],[1,0]]",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["dims"], serde_json::json!([2, 2, 2, 2]));
    let (code, _) = run(&[
        "fixtures",
        "--name",
        "example1",
        "--alpha",
        "[[1,0],[0,0]]",
        "--beta",
        "[[0,0],[1,0]]",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn analyze_example1() {
    let dir = tempfile::tempdir().unwrap();
    let set = fixture_file(dir.path(), "example1");
    let (code, text) = run(&["analyze", "--in", s(&set)]);
    assert_eq!(code, 0);
    let parties = json(&text);
    let dims: Vec<_> = parties
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["dimension"].as_u64().unwrap())
        .collect();
    assert_eq!(dims, [1, 1, 1, 4]);
    let trivial: Vec<_> = parties
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["trivial_only"].as_bool().unwrap())
        .collect();
    assert_eq!(trivial, [true, true, true, false]);
}

#[test]
fn certify_example2_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let set = fixture_file(dir.path(), "example2");
    let (code, text) = run(&["certify", "--in", s(&set)]);
    assert_eq!(code, 1);
    assert_eq!(json(&text)["refusal"]["code"], "no-applicable-rule");
}

#[test]
fn certify_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let ex1 = fixture_file(dir.path(), "example1");
    let eq1 = fixture_file(dir.path(), "eq1-six");
    let cert = dir.path().join("cert.json");
    let (code, text) = run(&["certify", "--in", s(&ex1), "--out", s(&cert)]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["certificate"]["rule"], "theorem-1");
    let (code, text) = run(&["verify", "--set", s(&ex1), "--cert", s(&cert)]);
    assert_eq!((code, json(&text)["valid"].as_bool()), (0, Some(true)));
    let (code, text) = run(&["verify", "--set", s(&eq1), "--cert", s(&cert)]);
    assert_eq!((code, json(&text)["valid"].as_bool()), (1, Some(false)));
}

#[test]
fn certify_with_hints_file() {
    let dir = tempfile::tempdir().unwrap();
    let ex1 = fixture_file(dir.path(), "example1");
    let hints = dir.path().join("hints.json");
    std::fs::write(&hints, r#"{"split": 3}"#).unwrap();
    let (code, text) = run(&["certify", "--in", s(&ex1), "--hints", s(&hints)]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["certificate"]["parameters"]["split"], 3);
    // the first two parties alone do not form an orthogonal set
    std::fs::write(&hints, r#"{"split": 2}"#).unwrap();
    let (code, text) = run(&["certify", "--in", s(&ex1), "--hints", s(&hints)]);
    assert_eq!(code, 1);
    assert_eq!(json(&text)["refusal"]["code"], "no-applicable-rule");
}

#[test]
fn construct_appends_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"base": "eq1-six", "appends": [{"alpha": [[1,0],[0,0]], "beta": [[0.6,0],[0.8,0]],
            "assignment": ["alpha","alpha","beta","beta","alpha","beta"]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("set.json");
    let hints = dir.path().join("hints.json");
    let (code, text) = run(&[
        "construct",
        "--plan",
        s(&plan),
        "--out",
        s(&out),
        "--hints-out",
        s(&hints),
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["set"]["dims"], serde_json::json!([2, 2, 2, 2]));
    let (code, text) = run(&["certify", "--in", s(&out), "--hints", s(&hints)]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["certificate"]["rule"], "theorem-1");
}

#[test]
fn simulate_example2_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let set = fixture_file(dir.path(), "example2");
    let tree = dir.path().join("tree.json");
    let (code, text) = run(&["fixtures", "--protocol", "example2"]);
    assert_eq!(code, 0);
    std::fs::write(&tree, text).unwrap();
    let (code, text) = run(&["simulate", "--set", s(&set), "--protocol", s(&tree)]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert_eq!(v["perfection"]["perfect"], true);
    assert_eq!(v["audit"]["violations"], 0);
}

#[test]
fn simulate_imperfect_tree_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let set = fixture_file(dir.path(), "eq1-six");
    let tree = dir.path().join("tree.json");
    std::fs::write(
        &tree,
        r#"{"party": 0, "measurement": {"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]},
            "children": [{"leaf": "psi1"}, {"leaf": "psi5"}]}"#,
    )
    .unwrap();
    let (code, text) = run(&["simulate", "--set", s(&set), "--protocol", s(&tree)]);
    assert_eq!(code, 1);
    assert_eq!(json(&text)["perfection"]["perfect"], false);
}

#[test]
fn lemma1_random_trials() {
    let (code, text) = run(&["lemma1", "--trials", "40", "--seed", "5"]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert_eq!(v["survived"], 40);
    assert_eq!(v["config"]["seed"], 5);
}

#[test]
fn lemma1_seed_from_environment() {
    let flag = run(&["lemma1", "--trials", "10", "--seed", "77"]).1;
    let out = Command::new(BIN)
        .args(["lemma1", "--trials", "10"])
        .env("LOCC_FORGE_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), flag);
}

#[test]
fn lemma1_given_measurement() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(
        &m,
        r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]}"#,
    )
    .unwrap();
    let (code, text) = run(&[
        "lemma1",
        "--measurement",
        s(&m),
        "--alpha",
        "[[1,0],[0,0]]",
        "--beta",
        "[[1,0],[1,0]]",
    ]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert_eq!(v["check"]["surviving_outcome"], 0);
    assert_eq!(v["outcomes"][1]["class"], "class-i");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let set = fixture_file(dir.path(), "example2");
    for args in [
        vec!["certify", "--in", s(&set)],
        vec!["analyze", "--in", s(&set), "--pretty"],
        vec!["lemma1", "--trials", "25", "--seed", "9"],
    ] {
        assert_eq!(run(&args), run(&args));
    }
}

#[test]
fn pretty_output_is_the_same_document() {
    let compact = json(&run(&["fixtures", "--name", "example2"]).1);
    let (code, text) = run(&["fixtures", "--name", "example2", "--pretty"]);
    assert_eq!(code, 0);
    assert!(text.contains('\n'));
    assert_eq!(json(&text), compact);
}

#[test]
fn usage_errors_exit_two_with_json() {
    for args in [
        vec!["frobnicate"],
        vec!["analyze", "--in", "x.json", "--unknown-flag"],
        vec!["analyze"],
        vec!["analyze", "--in", "/nonexistent/set.json"],
        vec!["fixtures", "--name", "no-such-set"],
        vec!["lemma1", "--tolerance", "-1"],
    ] {
        let (code, text) = run(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(json(&text)["error"]["message"].is_string(), "{args:?}");
    }
}

#[test]
fn malformed_set_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dims": [2], "states": [], "extra": 1}"#).unwrap();
    let (code, text) = run(&["analyze", "--in", s(&bad)]);
    assert_eq!(code, 2);
    assert_eq!(json(&text)["error"]["kind"], "parse");
}

#[test]
fn tolerance_flag_is_threaded_to_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("near.json");
    // |0>, and a vector 1e-6 away from |1>
    std::fs::write(
        &set,
        r#"{"dims": [2], "states": [{"label": "a", "factors": [[[1,0],[0,0]]]},
        {"label": "b", "factors": [[[1e-6,0],[1,0]]]}]}"#,
    )
    .unwrap();
    let (code, text) = run(&["certify", "--in", s(&set)]);
    assert_eq!(code, 1);
    assert_eq!(json(&text)["refusal"]["code"], "not-orthogonal");
    let (code, text) = run(&["certify", "--in", s(&set), "--tolerance", "1e-5"]);
    assert_eq!(code, 1);
    assert_eq!(json(&text)["refusal"]["code"], "no-applicable-rule");
    let (code, text) = run(&["analyze", "--in", s(&set), "--tolerance", "1e-5"]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)[0]["dimension"], 2);
    assert_eq!(run(&["analyze", "--in", s(&set)]).0, 2);
}
