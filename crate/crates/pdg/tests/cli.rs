//! End-to-end checks of the command-line surface: report shapes, exit codes,
//! and model-emitting subcommands.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pdg_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdg"))
}

fn fixture(name: &str) -> String {
    common::fixture_path(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    pdg_bin().args(args).output().expect("spawn pdg")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn inc_reports_positive_degree_for_the_conflicted_fixture() {
    let output = run(&["inc", &fixture("floomp.pdg.json")]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    assert!(report["degreeOfInconsistency"].as_f64().unwrap() > 0.01);

    let output = run(&["inc", &fixture("floomp_priors.pdg.json")]);
    let report = stdout_json(&output);
    assert!(report["degreeOfInconsistency"].as_f64().unwrap() < 1e-6);
}

#[test]
fn solve_and_limit_reproduce_the_overdetermination_anomaly() {
    let output = run(&["solve", &fixture("overdet.pdg.json"), "--gamma", "1"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    let p0 = report["mu"]["probs"][0].as_f64().unwrap();
    assert!((p0 - 0.8448).abs() < 1e-3, "{p0}");
    assert_eq!(report["converged"], Value::Bool(true));

    let output = run(&["limit", &fixture("overdet.pdg.json")]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    let p0 = report["mu"]["probs"][0].as_f64().unwrap();
    assert!((p0 - 0.7).abs() < 1e-3, "{p0}");
}

#[test]
fn score_and_check_consume_joint_files() {
    let output = run(&[
        "score",
        &fixture("floomp.pdg.json"),
        &fixture("floomp_product.joint.json"),
        "--gamma",
        "0.5",
    ]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    let inc = report["inc"].as_f64().unwrap();
    let idef = report["idef"].as_f64().unwrap();
    let total = report["total"].as_f64().unwrap();
    assert!(inc > 1.0);
    assert!((total - (inc + 0.5 * idef)).abs() < 1e-9);

    let output = run(&[
        "check",
        &fixture("floomp_priors.pdg.json"),
        &fixture("floomp_product.joint.json"),
        "--tol",
        "1e-7",
    ]);
    assert!(output.status.success());
    assert_eq!(stdout_json(&output)["consistent"], Value::Bool(true));

    let output = run(&[
        "check",
        &fixture("floomp.pdg.json"),
        &fixture("floomp_product.joint.json"),
        "--tol",
        "1e-3",
    ]);
    assert_eq!(stdout_json(&output)["consistent"], Value::Bool(false));
}

#[test]
fn convert_emits_a_parsable_model_file() {
    let output = run(&[
        "convert",
        "--from",
        "bn",
        "--to",
        "pdg",
        &fixture("smoking.bn.json"),
    ]);
    assert!(output.status.success());
    let model = pdg::io::parse(&output.stdout).unwrap();
    let pdg::io::Model::Pdg(converted) = model else {
        panic!("expected a pdg")
    };
    assert_eq!(converted.variables().len(), 6);
    assert_eq!(converted.edges().len(), 6);
    assert!(converted.var_id("S×SH").is_some());
}

#[test]
fn observe_union_restrict_emit_models() {
    let dir = std::env::temp_dir().join(format!("pdg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let output = run(&[
        "observe",
        &fixture("floomp_priors.pdg.json"),
        "--var",
        "G",
        "--value",
        "g",
        "--beta",
        "2",
    ]);
    assert!(output.status.success());
    let observed_path = dir.join("observed.pdg.json");
    std::fs::write(&observed_path, &output.stdout).unwrap();
    let pdg::io::Model::Pdg(observed) = pdg::io::parse(&output.stdout).unwrap() else {
        panic!()
    };
    assert!(observed.edge("obs:G").is_some());
    assert_eq!(observed.edge("obs:G").unwrap().beta, 2.0);

    let output = run(&[
        "union",
        &fixture("floomp_priors.pdg.json"),
        observed_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let pdg::io::Model::Pdg(unioned) = pdg::io::parse(&output.stdout).unwrap() else {
        panic!()
    };
    assert_eq!(unioned.edges().len(), 5); // 2 + 3 with suffixed duplicates

    let output = run(&[
        "restrict",
        &fixture("floomp.pdg.json"),
        "--keep",
        "1,F",
    ]);
    assert!(output.status.success());
    let pdg::io::Model::Pdg(restricted) = pdg::io::parse(&output.stdout).unwrap() else {
        panic!()
    };
    assert_eq!(restricted.variables().len(), 2);
    assert_eq!(restricted.edges().len(), 1);

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn query_reports_rows_with_flags() {
    let output = run(&[
        "query",
        &fixture("floomp_priors.pdg.json"),
        "--target",
        "G",
        "--given",
        "F",
    ]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    for row in 0..2 {
        let g = report["rows"][row][0].as_f64().unwrap();
        assert!((g - 0.05).abs() < 1e-3, "row {row}: {g}");
        assert_eq!(report["defined"][row], Value::Bool(true));
    }
}

#[test]
fn schema_errors_exit_2_with_a_structured_object() {
    let dir = std::env::temp_dir().join(format!("pdg-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.pdg.json");
    std::fs::write(&bad, br#"{"formatVersion": "pdg-json/1", "kind": "pdg"}"#).unwrap();

    let output = run(&["inc", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let report = stdout_json(&output);
    assert_eq!(report["error"]["code"], Value::String("schema".into()));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn infeasible_support_exits_4() {
    let dir = std::env::temp_dir().join(format!("pdg-cli-inf-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let contradictory = dir.join("contradictory.pdg.json");
    std::fs::write(
        &contradictory,
        serde_json::json!({
            "formatVersion": "pdg-json/1",
            "kind": "pdg",
            "body": {
                "variables": [
                    {"name": "1", "values": ["⋆"]},
                    {"name": "X", "values": ["a", "b"]}
                ],
                "edges": [
                    {"label": "p", "source": "1", "target": "X", "cpd": [[1.0, 0.0]]},
                    {"label": "q", "source": "1", "target": "X", "cpd": [[0.0, 1.0]]}
                ]
            }
        })
        .to_string(),
    )
    .unwrap();

    let output = run(&["inc", contradictory.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(4));
    let report = stdout_json(&output);
    assert_eq!(report["error"]["code"], Value::String("infeasible".into()));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exhausted_iteration_budget_exits_3() {
    let output = run(&[
        "solve",
        &fixture("overdet.pdg.json"),
        "--gamma",
        "1",
        "--max-iters",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("non-convergence"), "{text}");
}

#[test]
fn seed_makes_reports_deterministic() {
    let args = [
        "solve",
        &fixture("floomp.pdg.json"),
        "--gamma",
        "0.5",
        "--seed",
        "11",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn config_file_env_var_is_honored() {
    let dir = std::env::temp_dir().join(format!("pdg-cli-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("solver.json");
    std::fs::write(&cfg, br#"{"maxIters": 1}"#).unwrap();

    let output = pdg_bin()
        .env("PDG_CONFIG", cfg.as_os_str())
        .args(["solve", &fixture("overdet.pdg.json"), "--gamma", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3)); // one iteration cannot converge

    // flags override the config file
    let output = pdg_bin()
        .env("PDG_CONFIG", cfg.as_os_str())
        .args([
            "solve",
            &fixture("overdet.pdg.json"),
            "--gamma",
            "1",
            "--max-iters",
            "50000",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validate_reports_violations() {
    let dir = std::env::temp_dir().join(format!("pdg-cli-val-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let iffy = dir.join("warn.pdg.json");
    std::fs::write(
        &iffy,
        serde_json::json!({
            "formatVersion": "pdg-json/1",
            "kind": "pdg",
            "body": {
                "variables": [
                    {"name": "X", "values": ["a", "b"]},
                    {"name": "Y", "values": ["a", "b"]}
                ],
                "edges": [
                    {"label": "e", "source": "X", "target": "Y",
                     "cpd": [[0.5, 0.5], [0.5, 0.5]], "alpha": 3.0}
                ]
            }
        })
        .to_string(),
    )
    .unwrap();

    let output = run(&["validate", iffy.to_str().unwrap()]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    let violations = report["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert!(violations[0].as_str().unwrap().contains("alpha"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fixtures_directory_is_reachable() {
    assert!(Path::new(&fixture("floomp.pdg.json")).exists());
}
