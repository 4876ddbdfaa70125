use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn dingstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dingstab")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn export(dir: &tempfile::TempDir, label: &str, name: &str) -> String {
    let out = dingstab(&["catalog", "--export", label]);
    assert!(out.status.success());
    let path = dir.path().join(name);
    fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_b1_reports_unstable_with_exact_delta() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(&dir, "B1", "B1.json");
    let v = json_of(&dingstab(&["analyze", &path]));
    assert_eq!(v["classification"], "Unstable");
    assert_eq!(v["delta"], "-3/349");
    assert_eq!(v["structure"]["smooth"], true);
}

#[test]
fn analyze_dumps_moments_on_request() {
    let v = json_of(&dingstab(&["analyze", "P2", "--dump-moments"]));
    let moments = v["moments"]["moments"].as_array().unwrap();
    assert_eq!(moments.len(), 6);
    assert_eq!(moments[0]["alpha"], serde_json::json!([0, 0]));
}

#[test]
fn destabilize_b1_gives_the_energy_infimum() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(&dir, "B1", "B1.json");
    let v = json_of(&dingstab(&["destabilize", &path, "--tol", "1e-12"]));
    let e = v["energy_infimum"].as_f64().unwrap();
    assert!((e - 0.6878).abs() < 5e-4, "{e}");
    assert_eq!(v["solver"], "newton");
    assert_eq!(v["cross_check"]["solver"], "fixed_point");
    assert_eq!(v["balancing"]["passed"], true);
    for key in ["h", "B0", "mw_supremum", "residual", "iterations"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["destabilize", "reflexive2d/6d", "--seed", "5"];
    let a = dingstab(&args);
    let b = dingstab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invariant_lct_route_matches_the_direct_integral() {
    let dir = tempfile::tempdir().unwrap();
    let square = export(&dir, "reflexive2d/8a", "square.json");
    let g = dir.path().join("g.json");
    fs::write(&g, r#"{"pieces": [[0, 0, 0], [0, 1, 0]]}"#).unwrap();
    let v = json_of(&dingstab(&["invariant", &square, "--g", g.to_str().unwrap()]));
    assert_eq!(v["ding"], v["ding_via_lct"]["ding"]);
    assert_eq!(v["ding"], "1/4");
}

#[test]
fn inline_function_is_accepted() {
    let v = json_of(&dingstab(&["invariant", "P2", "--g", r#"{"pieces": [[0, 0, 0], [0, 1, 0]]}"#]));
    assert_eq!(v["ding"], v["ding_via_lct"]["ding"]);
}

#[test]
fn slope_rows_follow_the_time_grid() {
    let v = json_of(&dingstab(&[
        "slope",
        "reflexive2d/8a",
        "--g",
        r#"{"pieces": [[0, 0, 0], [0, 1, 0]]}"#,
        "--t-grid",
        "1,2,4",
    ]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(v["target_slope"], "1");
    // the square has Z(t) = 4(t + 4), so the slope at t is 1 - 4/(t + 4)
    for r in rows {
        let t = r["t"].as_f64().unwrap();
        assert!((r["slope_fd"].as_f64().unwrap() - (1.0 - 4.0 / (t + 4.0))).abs() < 1e-3);
    }
}

#[test]
fn csv_output_has_one_line_per_row() {
    let out = dingstab(&["slope", "P2", "--g", r#"{"pieces": [[0, 0, 0], [0, 1, 0]]}"#, "--t-grid", "1,2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("slope_fd"));
}

#[test]
fn mabuchi_check_passes_and_detects_a_shifted_constant() {
    let v = json_of(&dingstab(&["mabuchi-check"]));
    assert_eq!(v["passed"], true);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-8);
    let bad = dingstab(&["mabuchi-check", "--shift", "0.01"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn catalog_run_all_matches_every_entry_in_order() {
    let list = json_of(&dingstab(&["catalog", "--list"]));
    let v = json_of(&dingstab(&["catalog", "--run", "all"]));
    let labels: Vec<&Value> = list["rows"].as_array().unwrap().iter().map(|r| &r["label"]).collect();
    let ran: Vec<&Value> = v["rows"].as_array().unwrap().iter().map(|r| &r["label"]).collect();
    assert_eq!(labels, ran);
    assert_eq!(v["matched"], v["entries"]);
}

#[test]
fn exported_entries_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(&dir, "reflexive2d/7b", "p.json");
    let a = json_of(&dingstab(&["analyze", &path]));
    let b = json_of(&dingstab(&["analyze", "reflexive2d/7b"]));
    assert_eq!(a, b);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"fano_vertices\": [[1, 0], [0, 1").unwrap();
    let out = dingstab(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(dingstab(&["analyze", "no-such-entry"]).status.code(), Some(1));
    assert_eq!(dingstab(&["--tol", "-1", "analyze", "P2"]).status.code(), Some(1));
    assert_eq!(dingstab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn dimension_cap_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p4.json");
    // P^4 has a four-dimensional moment polytope, above the numeric cap
    fs::write(
        &p,
        r#"{"fano_vertices": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1],[-1,-1,-1,-1]]}"#,
    )
    .unwrap();
    let out = dingstab(&["slope", p.to_str().unwrap(), "--g", r#"{"pieces": [[0,0,0,0,0],[0,1,0,0,0]]}"#]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn nonconvergence_exits_with_two() {
    let out = dingstab(&["destabilize", "B1", "--max-iter", "1", "--solver", "fixedpoint"]);
    assert_eq!(out.status.code(), Some(2));
}
