use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SCENARIOS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");

fn v2i_ho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2i-ho")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    format!("{SCENARIOS}/{name}")
}

#[test]
fn validate_city() {
    let out = v2i_ho(&["validate", "--scenario", &scenario("city.json")]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("valid: 9 gNBs, 6 routes"), "{}", stdout(&out));
}

#[test]
fn validate_reports_named_violations() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("minimal.json")).unwrap();

    let no_params = dir.path().join("no_params.json");
    fs::write(&no_params, text.replace(",\n  \"params\": {}", "")).unwrap();
    let out = v2i_ho(&["validate", "--scenario", no_params.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("missing field `params`"), "{}", stderr(&out));

    let duplicate = dir.path().join("duplicate.json");
    fs::write(&duplicate, text.replace("\"id\": \"g2\"", "\"id\": \"g1\"")).unwrap();
    let out = v2i_ho(&["validate", "--scenario", duplicate.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("g1"), "{}", stderr(&out));

    let missing = dir.path().join("absent.json");
    let out = v2i_ho(&["validate", "--scenario", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("absent.json"), "{}", stderr(&out));
}

fn run_sweep(out_dir: &Path) -> Output {
    v2i_ho(&[
        "run",
        "--scenario",
        &scenario("minimal.json"),
        "--scheme",
        "a3,distance,probability",
        "--values",
        "0,4",
        "--seeds",
        "1,2",
        "--offsets",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ])
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = run_sweep(&out_dir);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("12 cells written"), "{}", stdout(&out));

    let aggregate = fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 13);
    let cells: Vec<_> = fs::read_dir(out_dir.join("cells")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(cells.len(), 24);

    let again = dir.path().join("again");
    assert!(run_sweep(&again).status.success());
    assert_eq!(aggregate, fs::read_to_string(again.join("aggregate.csv")).unwrap());

    let events = out_dir.join("cells/distance_v4_s1_route1.events.csv");
    let out = v2i_ho(&["replay", "--log", events.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stored = fs::read_to_string(out_dir.join("cells/distance_v4_s1_route1.report.json")).unwrap();
    assert_eq!(stdout(&out), stored);
}

#[test]
fn replay_of_truncated_log_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    assert!(run_sweep(&out_dir).status.success());
    let text = fs::read_to_string(out_dir.join("cells/a3-1dB_v0_s1_route1.events.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = dir.path().join("cut.csv");
    fs::write(&cut, format!("{}\n{}\n", lines[..5].join("\n"), &lines[5][..lines[5].len() / 2])).unwrap();
    let out = v2i_ho(&["replay", "--log", cut.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 6"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("x");
    let path = out_dir.to_str().unwrap();
    let city = scenario("city.json");
    let out = v2i_ho(&["run", "--scenario", &city, "--scheme", "bogus", "--seeds", "1", "--out", path]);
    assert!(!out.status.success());
    let out = v2i_ho(&["run", "--scenario", &city, "--seeds", "1", "--route", "nowhere", "--out", path]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nowhere"), "{}", stderr(&out));
    assert!(!out_dir.exists());
}
