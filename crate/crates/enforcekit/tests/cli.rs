//! End-to-end checks of the command-line surface and its exit codes:
//! 0 success, 1 domain failure, 2 input error.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enforcekit")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> String {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name).to_str().unwrap().to_string()
}

#[test]
fn validate_accepts_the_camera_model() {
    let out = run(&[
        "validate",
        "--model",
        &fixture("corpus/models/camera_policy1.json"),
        "--catalog",
        &fixture("catalog.android.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 error(s)"));
}

#[test]
fn validate_rejects_a_missing_initial_state_with_exit_1() {
    let bad = tmp("missing_initial.json");
    let text = std::fs::read_to_string(fixture("corpus/models/camera_policy1.json")).unwrap();
    std::fs::write(&bad, text.replace("\"initial\": true", "\"initial\": false")).unwrap();
    let out = run(&["validate", "--model", &bad, "--catalog", &fixture("catalog.android.json")]);
    // the structural break surfaces while loading the file
    assert_eq!(out.status.code(), Some(2));

    // an unknown method is loadable but undeployable: exit 1
    let typo = tmp("typo_method.json");
    let text = std::fs::read_to_string(fixture("corpus/models/camera_policy1.json")).unwrap();
    std::fs::write(&typo, text.replace("Camera.open", "Camera.openn")).unwrap();
    let out = run(&["validate", "--model", &typo, "--catalog", &fixture("catalog.android.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("UnknownMethod"));
}

#[test]
fn validate_rejects_non_json_with_exit_2() {
    let bad = tmp("not_json.txt");
    std::fs::write(&bad, "this is not a model").unwrap();
    let out = run(&["validate", "--model", &bad, "--catalog", &fixture("catalog.android.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enforce_with_zero_active_transitions_is_identity() {
    // the vacuous session comes from a model that never matches the trace
    let out_path = tmp("identity_out.jsonl");
    let out = run(&[
        "enforce",
        "--model",
        &fixture("corpus/models/camera_policy1.json"),
        "--trace",
        &fixture("demo/ops_input.jsonl"),
        "--out",
        &out_path,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let original = std::fs::read_to_string(fixture("demo/ops_input.jsonl")).unwrap();
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(original, written, "untouched traces round-trip byte-for-byte");
}

#[test]
fn gen_writes_both_profiles() {
    let dir = tmp("genout");
    for profile in ["xposed-java", "simscript"] {
        let out = run(&[
            "gen",
            "--model",
            &fixture("corpus/models/camera_policy1.json"),
            "--profile",
            profile,
            "--out",
            &dir,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(PathBuf::from(&dir).join("CameraReleaseOnPause.xposed-java.txt").exists());
    assert!(PathBuf::from(&dir).join("CameraReleaseOnPause.simscript.json").exists());
}

#[test]
fn run_resolves_scenario_models_and_prints_the_verdict() {
    let out = run(&[
        "run",
        "--scenario",
        &fixture("scenarios/plumeria_camera_leak.json"),
        "--catalog",
        &fixture("catalog.android.json"),
        "--enforce",
        "on",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict Healed"));
}

#[test]
fn corpus_expectation_gates_the_exit_code() {
    let ok = run(&[
        "corpus",
        "--corpus",
        &fixture("corpus"),
        "--catalog",
        &fixture("catalog.android.json"),
        "--expect",
        "17:10",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let wrong = run(&[
        "corpus",
        "--corpus",
        &fixture("corpus"),
        "--catalog",
        &fixture("catalog.android.json"),
        "--expect",
        "16:11",
    ]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn json_output_is_machine_readable() {
    let out = run(&[
        "run",
        "--scenario",
        &fixture("scenarios/plumeria_camera_leak.json"),
        "--catalog",
        &fixture("catalog.android.json"),
        "--enforce",
        "off",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(value["verdict"], "violationUnhealed");
    assert!(value["exceptions"].as_array().is_some_and(|a| !a.is_empty()));
}
