//! End-to-end runs of the `ifsconn` binary: exit codes, emitted files and
//! their formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ifsconn::cli::{verify_exit_code, EXIT_BUDGET, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY_FAILED};
use ifsconn::sets::CellSet;
use ifsconn::verify::{CheckOutcome, VerifyReport};
use serde_json::Value;

const HALVES: &str = r#""maps": {"f": {"scalar": {"dim": 1, "factor": 0.5}}, "g": {"scalar": {"dim": 1, "factor": 0.5}}}"#;
const THIRDS: &str = r#""maps": {"f": {"scalar": {"dim": 1, "factor": 0.3333333333333333}}, "g": {"scalar": {"dim": 1, "factor": 0.3333333333333333}}}"#;

fn ifsconn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifsconn")).args(args).output().expect("binary runs")
}

fn run_with(config: &Path, args: &[&str], out: &Path) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    ifsconn(&full)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn classify_halves_prints_connected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"version": 1, {HALVES}, "classify": {{"w": [1.0]}}}}"#));
    let o = ifsconn(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("CONNECTED\n"), "{}", stdout(&o));
}

#[test]
fn classify_without_fastpath_still_connected_and_thirds_disconnected() {
    let dir = tempfile::tempdir().unwrap();
    let halves = write(dir.path(), "h.json", &format!(r#"{{"version": 1, {HALVES}, "classify": {{"w": [1.0]}}}}"#));
    let o = ifsconn(&["classify", "--fastpath", "off", "--config", halves.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    assert!(text.starts_with("CONNECTED\n"));
    let cert: Value = serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
    assert_eq!(cert["fastpath"], false);
    assert_eq!(cert["components"], 1);

    let thirds = write(dir.path(), "t.json", &format!(r#"{{"version": 1, {THIRDS}, "classify": {{"w": [1.0]}}}}"#));
    let o = ifsconn(&["classify", "--config", thirds.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("DISCONNECTED\n"));
}

#[test]
fn nonpositive_eps_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for eps in ["0", "-0.25"] {
        let cfg = write(
            dir.path(),
            "bad.json",
            &format!("{{\n  \"version\": 1,\n  {HALVES},\n  \"attractor\": {{\"w\": [0.5], \"eps\": {eps}}}\n}}\n"),
        );
        let o = run_with(&cfg, &["attractor"], &out);
        assert_eq!(o.status.code(), Some(EXIT_CONFIG));
        let err = stderr(&o);
        assert!(err.contains("attractor.eps") && err.contains("line 4"), "{err}");
        assert!(!out.exists());
    }
}

#[test]
fn schema_violations_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("unknown key", format!("{{\"version\": 1, {HALVES}, \"colour\": 3}}"), "colour"),
        ("wrong version", "{\"version\": 2}".to_string(), "version"),
        ("malformed json", "{\"version\": 1,".to_string(), "line 1"),
        ("missing block", format!("{{\"version\": 1, {HALVES}}}"), "sweep"),
        (
            "dimension mismatch",
            r#"{"version": 1, "maps": {"f": {"scalar": {"dim": 1, "factor": 0.5}}, "g": {"scalar": {"dim": 2, "factor": 0.5}}}, "sweep": {"window": {"interval": {"lo": -1, "hi": 1, "resolution": 3}}}}"#.to_string(),
            "dimension",
        ),
        (
            "bad policy",
            format!(r#"{{"version": 1, {HALVES}, "sweep": {{"window": {{"interval": {{"lo": -1, "hi": 1, "resolution": 3}}}}, "policy": {{"classify": {{"levels": 0}}}}}}}}"#),
            "levels",
        ),
        (
            "non-contraction",
            r#"{"version": 1, "maps": {"f": {"scalar": {"dim": 1, "factor": 1.5}}, "g": {"scalar": {"dim": 1, "factor": 0.5}}}, "sweep": {"window": {"interval": {"lo": -1, "hi": 1, "resolution": 3}}}}"#.to_string(),
            "error",
        ),
    ];
    for (what, text, needle) in cases {
        let cfg = write(dir.path(), "c.json", &text);
        let o = run_with(&cfg, &["sweep"], &out);
        assert_eq!(o.status.code(), Some(EXIT_CONFIG), "{what}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{what}: {}", stderr(&o));
        assert!(!out.exists(), "{what} left output behind");
    }
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    assert_eq!(ifsconn(&["sweep"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(ifsconn(&["frobnicate"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(ifsconn(&["sweep", "--fastpath", "sometimes"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(ifsconn(&["sweep", "--config", "/nonexistent/run.json"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(ifsconn(&[]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(ifsconn(&["--help"]).status.code(), Some(EXIT_OK));
    assert_eq!(ifsconn(&["--version"]).status.code(), Some(EXIT_OK));
}

#[test]
fn exhausted_budget_exits_three_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"version": 1, {HALVES}, "attractor": {{"w": [0.5], "eps": 0.001, "max_cells": 10}}}}"#),
    );
    let o = run_with(&cfg, &["attractor"], &out);
    assert_eq!(o.status.code(), Some(EXIT_BUDGET), "{}", stderr(&o));
    assert!(stderr(&o).contains("budget"));
    assert!(!out.exists());

    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"version": 1, {HALVES}, "attractor": {{"w": [0.5], "eps": 0.01, "max_iterations": 1}}}}"#),
    );
    assert_eq!(run_with(&cfg, &["attractor"], &out).status.code(), Some(EXIT_BUDGET));
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "not-a-dir", "x");
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"version": 1, {HALVES}, "attractor": {{"w": [0.5], "eps": 0.0625}}}}"#));
    let o = run_with(&cfg, &["attractor"], &blocker);
    assert_eq!(o.status.code(), Some(EXIT_IO), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&blocker).unwrap(), "x");
}

#[test]
fn verify_passes_and_failing_report_maps_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = ifsconn(&["verify", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stdout(&o));
    assert!(stdout(&o).contains("13/13 checks passed"));
    let prov = json(&out.join("verify.json"));
    assert_eq!(prov["seed"], 3);
    assert_eq!(prov["command"], "verify");

    let failing = VerifyReport {
        seed: 0,
        checks: vec![CheckOutcome { name: "x".into(), passed: false, detail: String::new() }],
    };
    assert_eq!(verify_exit_code(&failing), EXIT_VERIFY_FAILED);
}

fn sweep_config(dir: &Path) -> PathBuf {
    write(
        dir,
        "sweep.json",
        &format!(
            r#"{{"version": 1, "seed": 5, {THIRDS},
  "sweep": {{"window": {{"interval": {{"lo": -1.0, "hi": 1.0, "resolution": 33}}}}, "policy": {{"fastpath": false}}, "refine_depth": 1}}}}"#
        ),
    )
}

#[test]
fn sweep_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path());
    let before = std::fs::read(&cfg).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run_with(&cfg, &["sweep", "--workers", "1"], &a).status.code(), Some(EXIT_OK));
    assert_eq!(run_with(&cfg, &["sweep", "--workers", "3"], &b).status.code(), Some(EXIT_OK));
    for name in ["sweep.pgm", "sweep.csv", "refined.pgm", "refined.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(std::fs::read(&cfg).unwrap(), before, "config was modified");
}

#[test]
fn sweep_artifacts_have_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path());
    let out = dir.path().join("o");
    let o = run_with(&cfg, &["sweep", "--seed", "9"], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(stdout(&o).starts_with("connected=1 disconnected=32 unknown=0\n"), "{}", stdout(&o));

    let pgm = std::fs::read(out.join("sweep.pgm")).unwrap();
    let header = b"P5\n33 1\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    let body = &pgm[header.len()..];
    assert_eq!(body.len(), 33);
    assert_eq!(body[16], 255);
    assert!(body.iter().enumerate().all(|(i, &g)| i == 16 || g == 0));

    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,j,w0,class,gap,components,resolutions,margin"));
    let centre: Vec<&str> = lines.nth(16).unwrap().split(',').collect();
    assert_eq!(&centre[..4], &["16", "0", "0.0", "CONNECTED"]);
    assert_eq!(csv.lines().count(), 34);

    let prov = json(&out.join("sweep.json"));
    assert_eq!(prov["seed"], 9);
    assert_eq!(prov["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(prov["counts"]["connected"], 1);
    assert!(prov["timings"]["total_seconds"].is_number());
    assert_eq!(prov["eps_schedule"].as_array().unwrap().len(), 5);
}

#[test]
fn attractor_emits_cells_bound_and_chaos_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        &format!(r#"{{"version": 1, "seed": 2, {HALVES}, "attractor": {{"w": [0.5], "eps": 0.0078125, "chaos_points": 500}}}}"#),
    );
    let out = dir.path().join("o");
    let o = run_with(&cfg, &["attractor"], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("cells="));
    let cells = CellSet::from_text(&std::fs::read_to_string(out.join("attractor.cells")).unwrap()).unwrap();
    let (lo, hi) = cells.bounds();
    assert!(lo[0] <= 0.0 && hi[0] >= 1.0 && lo[0] > -0.02 && hi[0] < 1.02, "{lo:?} {hi:?}");
    let prov = json(&out.join("attractor.json"));
    assert_eq!(prov["command"], "attractor");
    assert_eq!(prov["seed"], 2);
    assert_eq!(prov["attractor"]["cells"], cells.len());
    let orbit = std::fs::read_to_string(out.join("chaos.csv")).unwrap();
    assert_eq!(orbit.lines().count(), 501);
}

#[test]
fn tiles_mset_and_covering_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "all.json",
        &format!(
            r#"{{"version": 1, {HALVES},
  "tiles": {{"tile": {{"matrix": [[1, -1], [1, 1]], "digits": [[0, 0], [1, 0]]}}, "policy": {{"eps0": 0.0625, "levels": 3}}}},
  "mset": {{"n": 2, "domain": {{"lo": [0], "hi": [1]}}, "eps": 0.001953125, "window": {{"interval": {{"lo": -2, "hi": 2, "resolution": 101}}}}}},
  "covering": {{"k": 2, "nmax": 12, "eps": 0.00390625, "window": {{"interval": {{"lo": -2, "hi": 2, "resolution": 41}}}}}}}}"#
        ),
    );
    let out = dir.path().join("o");
    let o = run_with(&cfg, &["tiles"], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("CONNECTED"));
    assert_eq!(json(&out.join("tiles.json"))["contracting_power"], 1);

    assert_eq!(run_with(&cfg, &["mset"], &out).status.code(), Some(EXIT_OK));
    let pgm = std::fs::read(out.join("mset.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n101 1\n255\n"));
    assert!(std::fs::read_to_string(out.join("mset.csv")).unwrap().starts_with("i,j,w0,member\n"));

    assert_eq!(run_with(&cfg, &["covering"], &out).status.code(), Some(EXIT_OK));
    assert_eq!(json(&out.join("covering.json"))["members"], 41);
}

#[test]
fn tiles_reject_three_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"version": 1, "tiles": {"tile": {"matrix": [[3]], "digits": [[0], [1], [2]]}}}"#,
    );
    let o = run_with(&cfg, &["tiles"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&o).contains("two digits"), "{}", stderr(&o));
}
