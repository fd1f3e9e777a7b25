//! Black-box CLI tests: exit codes, diagnostic formatting, JSON report
//! stability, and the extension-registry environment hook.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../missions")
}

fn skymission(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skymission"))
        .args(args)
        .env_remove("SKYMISSION_ACTIONS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn check_clean_mission_exits_zero() {
    let path = corpus_root().join("crop_survey.msn");
    let out = skymission(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("0 errors"));
}

#[test]
fn check_broken_mission_prints_positioned_code_and_exits_one() {
    let path = corpus_root().join("bad/p004.msn");
    let out = skymission(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    // file:line:col: CODE severity: message
    assert!(err.contains("p004.msn:"), "{err}");
    assert!(err.contains("P004 error:"), "{err}");
    let after_file = err.split("p004.msn:").nth(1).unwrap();
    let mut nums = after_file.split(':');
    nums.next().unwrap().parse::<u32>().expect("line number");
    nums.next().unwrap().parse::<u32>().expect("column number");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = skymission(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr(&out).is_empty());
}

#[test]
fn missing_file_is_io_error() {
    let out = skymission(&["check", "/nonexistent/mission.msn"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_report_is_stable_and_schema_shaped() {
    let path = corpus_root().join("bad/t003.msn");
    let a = skymission(&["check", "--json", path.to_str().unwrap()]);
    let b = skymission(&["check", "--json", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout, "JSON output must be stable");
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(v["file"].is_string());
    assert!(v["errors"].as_u64().unwrap() >= 1);
    let d = &v["diagnostics"][0];
    for key in ["code", "severity", "message", "line", "column"] {
        assert!(!d[key].is_null(), "missing key {key}: {d}");
    }
}

#[test]
fn fmt_preserves_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_root().join("bad/t002.msn");
    let copy = dir.path().join("t002.msn");
    std::fs::copy(&src, &copy).unwrap();

    let before = skymission(&["check", copy.to_str().unwrap()]);
    let fmt = skymission(&["fmt", "--write", copy.to_str().unwrap()]);
    assert_eq!(fmt.status.code(), Some(0), "{}", stderr(&fmt));
    let after = skymission(&["check", copy.to_str().unwrap()]);

    let codes = |out: &Output| -> Vec<String> {
        stderr(out)
            .lines()
            .filter_map(|l| l.split_whitespace().find(|w| w.len() == 4 && w.starts_with('T')))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(codes(&before), codes(&after));
    assert_eq!(before.status.code(), after.status.code());
}

#[test]
fn run_writes_default_trace_and_prints_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let mission = dir.path().join("m.msn");
    std::fs::copy(corpus_root().join("minimal.msn"), &mission).unwrap();
    let scenario = corpus_root().join("scenarios/basic.json");
    let out = skymission(&[
        "run",
        mission.to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "Completed");
    let trace = dir.path().join("m.trace.jsonl");
    let body = std::fs::read_to_string(&trace).unwrap();
    assert!(body.ends_with("{\"outcome\":\"Completed\"}\n"));
}

#[test]
fn gen_then_run_fls_matches_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let mission = corpus_root().join("crop_survey.msn");
    let scenario = corpus_root().join("scenarios/field.json");
    let fls = dir.path().join("m.fls");
    let t_direct = dir.path().join("direct.jsonl");
    let t_script = dir.path().join("script.jsonl");

    let gen = skymission(&[
        "gen",
        mission.to_str().unwrap(),
        "--out",
        fls.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));

    for (input, trace) in [(mission.to_str().unwrap(), &t_direct), (fls.to_str().unwrap(), &t_script)] {
        let out = skymission(&[
            "run",
            input,
            "--scenario",
            scenario.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let events = |p: &PathBuf| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| l.contains("\"event\""))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(events(&t_direct), events(&t_script));
}

#[test]
fn graph_prints_dot_to_stdout() {
    let path = corpus_root().join("minimal.msn");
    let out = skymission(&["graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("->"));
}

#[test]
fn extension_registry_env_var_enables_new_actions() {
    let dir = tempfile::tempdir().unwrap();
    let actions = dir.path().join("actions.toml");
    std::fs::write(
        &actions,
        r#"
[[action]]
name = "count_trees"
category = "processing"
input = "image"
output = "number"
"#,
    )
    .unwrap();
    let mission = dir.path().join("trees.msn");
    std::fs::write(
        &mission,
        r#"
mission "trees" {
  flow {
    takeoff(altitude = 5.0) {
      shot: take_picture()
    }
    if count_trees(shot) > 10.0 -> done else -> done
    done: touchdown()
  }
}"#,
    )
    .unwrap();

    // without the extension, the processing action is unknown
    let plain = skymission(&["check", mission.to_str().unwrap()]);
    assert_eq!(plain.status.code(), Some(1));
    assert!(stderr(&plain).contains("R003"));

    let extended = Command::new(env!("CARGO_BIN_EXE_skymission"))
        .args(["check", mission.to_str().unwrap()])
        .env("SKYMISSION_ACTIONS", &actions)
        .output()
        .unwrap();
    assert_eq!(
        extended.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&extended.stderr)
    );
}
