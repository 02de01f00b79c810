//! End-to-end tests of the command-line interface: exit codes, JSON report
//! shapes, determinism, and robustness against malformed input.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lieconf")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child.stdin.as_mut().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().expect("binary finishes")
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(
        !out.stdout.is_empty(),
        "no stdout; stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn classify_matches_expected_structure() {
    let out = run(&[
        "classify",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["solvable"], true);
    assert_eq!(v["nilpotent"], false);
    assert_eq!(v["abelian"], false);
    assert_eq!(v["derived_length"], 2);
    assert_eq!(v["stabilized_ideal_rank"], 1);
    assert_eq!(v["stabilized_ideal"], serde_json::json!(["n"]));
    assert_eq!(v["centre"], serde_json::json!(["e"]));
    assert_eq!(v["axioms_verified"], true);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let path = fixture("example54.alg");
    let args = [
        "decompose",
        "--element",
        "u + D*n",
        "--input",
        path.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "3",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn check_flags_skew_violations_with_exit_2() {
    let out = run(&[
        "check",
        "--input",
        fixture("bad_skew.alg").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert_eq!(v["passes"], false);
    let violations = v["violations"].as_array().unwrap();
    assert!(violations.iter().any(|s| s.as_str().unwrap().contains("skew")));
}

#[test]
fn check_passes_on_the_example() {
    let out = run(&[
        "check",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all conformal axioms hold"));
}

#[test]
fn decompose_reports_the_split() {
    let out = run(&[
        "decompose",
        "--generator",
        "u + D*n",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let weights = v["weights"].as_object().unwrap();
    let mut keys: Vec<&String> = weights.keys().collect();
    keys.sort();
    assert_eq!(keys, vec!["0", "1"]);
    assert_eq!(v["covers"], true);
    assert_eq!(v["n_part"], serde_json::json!(["n"]));
    assert_eq!(v["singularity"], 1);
    // the modification produced an element of the form u - k·n
    let modified = v["modified"].as_str().unwrap();
    assert!(modified.contains('u'), "modified = {modified}");
    assert_eq!(v["filtration_weights"], serde_json::json!(["1", "0", "0"]));
}

#[test]
fn modify_trace_ends_in_u_minus_kn() {
    let out = run(&[
        "modify",
        "--element",
        "u + D*n",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["original"], "u + D*n");
    let result = v["result"].as_str().unwrap();
    assert!(result == "u" || result.starts_with("u - ") || result.starts_with("u + "));
    assert!(!result.contains('D'), "no derivative terms may survive: {result}");
    assert!(!v["steps"].as_array().unwrap().is_empty());
    assert_eq!(v["singularity"], 1);
}

#[test]
fn example_pipes_into_other_commands() {
    let example = run(&["example", "vertex-M"]);
    assert!(example.status.success());
    let definition = String::from_utf8(example.stdout).unwrap();
    assert!(definition.starts_with("vertex M"));
    let classify = run_stdin(&["classify", "--input", "-", "--format", "json"], &definition);
    assert!(classify.status.success());
    let v = json_of(&classify);
    assert_eq!(v["solvable"], true);
    assert_eq!(v["nilpotent"], false);
}

#[test]
fn vertex_root_decomposition_via_cli() {
    let example = run(&["example", "vertex-M"]);
    let definition = String::from_utf8(example.stdout).unwrap();
    let out = run_stdin(&["decompose", "--input", "-", "--format", "json"], &definition);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["n_part"], serde_json::json!(["n"]));
    assert_eq!(v["singularity"], 1);
    assert_eq!(v["vertex_axioms_pass"], true);
}

#[test]
fn unknown_example_is_an_error() {
    let out = run(&["example", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_and_malformed_inputs_never_crash() {
    for bad in [
        "",
        "algebra\n",
        "algebra A\nbracket x y = 1\n",
        "algebra A\ngenerator x\nbracket x x = ((1\n",
        "vertex V\ngenerator e\nproduct e e zz = e\n",
        "\u{0}\u{1}\u{2}",
        "algebra A\ngenerator x torsion L\n",
    ] {
        let out = run_stdin(&["classify", "--input", "-"], bad);
        assert_eq!(out.status.code(), Some(1), "input: {bad:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_input_is_reported() {
    let out = run(&["classify"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--input"));
}

#[test]
fn series_text_output_shows_the_chain() {
    let out = run(&[
        "series",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("derived series"));
    assert!(text.contains("L^(1) = [n]"));
    assert!(text.contains("stabilized ideal: [n]"));
}

#[test]
fn aggregate_report_on_conformal_input() {
    let out = run(&[
        "report",
        "--input",
        fixture("example54.alg").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["command"], "report");
    assert_eq!(v["solvable"], true);
    assert_eq!(v["centre"], serde_json::json!(["e"]));
}
