use std::path::Path;
use std::process::{Command, Output};

use densecode::constructions::rotate;
use densecode::io::{operator_set_to_json, parse_region_csv, sha256_hex, OperatorSetFile, RunManifest};
use densecode::{OperatorSet, SchmidtVector, Unitary};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densecode"))
        .args(args)
        .env_remove("DENSECODE_SEED")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `"+4.0e-1-2.0e-3i"` -> `(0.4, -0.002)`.
fn split_complex(entry: &str) -> (f64, f64) {
    let bytes = entry.as_bytes();
    let cut = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'e')
        .unwrap();
    (entry[..cut].parse().unwrap(), entry[cut..entry.len() - 1].parse().unwrap())
}

#[test]
fn construct_d_plus_1_writes_set_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("psi3.json");
    let out = run(&["construct", "d-plus-1", "--d", "3", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["n"], 4);
    assert!(report["residual"].as_f64().unwrap() < 1e-12);

    let text = std::fs::read_to_string(&file).unwrap();
    let parsed: OperatorSetFile = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.unitaries.len(), 4);
    assert_eq!(parsed.meta["construction"], "d-plus-1");

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("psi3.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "construct");
    assert_eq!(manifest.outputs.len(), 1);
    assert_eq!(manifest.outputs[0].sha256, sha256_hex(text.as_bytes()));
    assert_eq!(manifest.input_state.unwrap(), vec![2.0 / 3.0, 1.0 / 3.0, 0.0]);
}

#[test]
fn construct_weyl_and_phases() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["construct", "weyl", "--d", "4", "--out", p(&dir.path().join("w.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["n"], 16);

    let out = run(&["construct", "phases", "--state", "0.5,0.3,0.2", "--n", "2", "--out", p(&dir.path().join("ph.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["n"], 6);

    let out = run(&["construct", "grouped", "--state", "1/2,1/4,1/4", "--groups", "0;1,2", "--out", p(&dir.path().join("g.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["n"], 6);
}

#[test]
fn construct_failures_exit_2_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    let out = run(&["construct", "phases", "--state", "0.6,0.4,0", "--n", "2", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["reason"], "lambda0 exceeds 1/N");
    assert!(!file.exists());

    let out = run(&["construct", "phases", "--state", "0.6,0.3", "--n", "2", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "normalization");

    let out = run(&["construct", "phases", "--state", "6,3,1", "--normalize", "--n", "2", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["construct", "weyl", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["construct", "nonsense", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    assert!(run(&["construct", "d-plus-1", "--d", "3", "--out", p(&file)]).status.success());
    let out = run(&["verify", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("orthogonal yes"));
    let gram_rows: Vec<&str> = text.lines().skip_while(|l| *l != "gram").skip(1).take(4).collect();
    assert_eq!(gram_rows.len(), 4);
    assert!(gram_rows.iter().all(|r| r.split(' ').count() == 4));
    assert!(gram_rows[0].starts_with("+1.00000000000000e0"));

    let mut parsed: OperatorSetFile = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    parsed.unitaries[2][1][0][0] += 1e-3;
    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, serde_json::to_string(&parsed).unwrap()).unwrap();
    let out = run(&["verify", p(&corrupt)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("orthogonal no"));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"d\": 2,").unwrap();
    assert_eq!(run(&["verify", p(&garbage)]).status.code(), Some(2));
    assert_eq!(run(&["verify", p(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn verify_reports_the_identity_z_overlap() {
    let state = SchmidtVector::new(&[0.7, 0.3], 2).unwrap();
    let set = OperatorSet::new(state, vec![Unitary::identity(2), rotate(2, 1).unwrap()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("iz.json");
    std::fs::write(&file, operator_set_to_json(&set, Default::default())).unwrap();
    let out = run(&["verify", p(&file)]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    let row0 = text.lines().skip_while(|l| *l != "gram").nth(1).unwrap();
    let entry = row0.split(' ').nth(1).unwrap();
    let (re, _) = split_complex(entry);
    assert!((re - 0.4).abs() < 1e-14, "{entry}");
}

#[test]
fn search_examples() {
    let out = run(&["search", "--state", "0.7,0.3", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["status"], "NotFound");

    // six-decimal inputs are only meaningful at their own precision
    let out = run(&["search", "--state", "0.666667,0.333333,0", "--n", "4", "--tol", "1e-5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["status"], "Feasible");
    let out = run(&["search", "--state", "2/3,1/3,0", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["search", "--state", "0.333333,0.333333,0.333334", "--max", "--tol", "1e-5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["n_max"], 9);
    let out = run(&["search", "--state", "1/3,1/3,1/3", "--max"]);
    assert_eq!(stdout_json(&out)["n_max"], 9);
}

#[test]
fn search_writes_the_found_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("found.json");
    let out = run(&["search", "--state", "0.36,0.34,0.3", "--n", "7", "--restarts", "8", "--out", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(run(&["verify", p(&file)]).status.code(), Some(0));
    assert!(dir.path().join("found.manifest.json").exists());
}

#[test]
fn search_usage_errors() {
    assert_eq!(run(&["search", "--state", "0.5,0.5"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--state", "0.5,0.5", "--n", "3", "--max"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--state", "0.5,0.5", "--n", "5"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--state", "0.5,0.5", "--n", "3", "--restarts", "0"]).status.code(), Some(2));
    assert_eq!(run(&["search", "--state", "a,b", "--n", "3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn map_writes_csv_svg_and_manifest_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |prefix: &Path| vec!["map".to_string(), "--resolution".into(), "8".into(), "--restarts".into(), "8".into(), "--out".into(), p(prefix).into()];
    let out = Command::new(env!("CARGO_BIN_EXE_densecode")).args(args(&a)).env("DENSECODE_SEED", "99").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_densecode"))
        .args(args(&b))
        .args(["--jobs", "2"])
        .env("DENSECODE_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let csv_a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let csv_b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let svg_a = std::fs::read_to_string(dir.path().join("a.svg")).unwrap();
    assert_eq!(svg_a, std::fs::read_to_string(dir.path().join("b.svg")).unwrap());
    assert!(svg_a.starts_with("<svg") && svg_a.contains("polyline"));

    let rows = parse_region_csv(&csv_a).unwrap();
    assert_eq!(rows.len(), 45);
    assert!(rows.iter().all(|r| r.2 >= 3 && r.2 != 8));
    assert_eq!(rows.iter().filter(|r| r.2 == 9).count(), 1);

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config["seed"], 99);
    assert_eq!(manifest.config["resolution"], 8);
    assert_eq!(manifest.outputs.len(), 2);
    assert_eq!(manifest.outputs[0].sha256, sha256_hex(csv_a.as_bytes()));
    assert_eq!(manifest.outputs[1].sha256, sha256_hex(svg_a.as_bytes()));

    assert_eq!(run(&["map", "--resolution", "4", "--out", p(&a)]).status.code(), Some(2));
}

#[test]
fn minent_table_for_qutrits() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("t3");
    let out = run(&["minent", "--d", "3", "--n-range", "4..6", "--out", p(&prefix)]);
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("t3.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("N,d,lambda0_min,entropy_min,capacity_bound"));
    let expected = [2.0 / 3.0, 0.6, 0.5];
    for (line, want) in lines.zip(expected) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[2] - want).abs() <= 1e-3 + 1e-12, "{line}");
        assert!(f[3] >= f[4] - 1e-6, "{line}");
    }
    let curve = std::fs::read_to_string(dir.path().join("t3.entropy.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("N,entropy_min,capacity_bound"));
    assert_eq!(curve.lines().count(), 4);
    assert!(dir.path().join("t3.manifest.json").exists());

    assert_eq!(run(&["minent", "--d", "3", "--n-range", "3..5", "--out", p(&prefix)]).status.code(), Some(2));
    assert_eq!(run(&["minent", "--d", "3", "--n-range", "5..7", "--out", p(&prefix)]).status.code(), Some(2));
    assert_eq!(run(&["minent", "--d", "3", "--n-range", "x", "--out", p(&prefix)]).status.code(), Some(2));
}

#[test]
fn simulate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("psi3.json");
    assert!(run(&["construct", "d-plus-1", "--d", "3", "--out", p(&file)]).status.success());
    let out = run(&["simulate", "--set", p(&file), "--message", "0,3,1", "--shots", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["decoded"], serde_json::json!([0, 3, 1]));
    assert!((r["dits_per_use"].as_f64().unwrap() - 1.262).abs() < 5e-4);
    assert_eq!(r["shot_successes"], serde_json::json!([50, 50, 50]));

    let out = run(&["simulate", "--construct", "weyl", "--d", "2", "--message", "0,1,2,3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["dits_per_use"], 2.0);

    let out = run(&["simulate", "--construct", "weyl", "--d", "2", "--state", "0.7,0.3", "--message", "0,1,2,3", "--tol", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert!(r["success_probability"].as_array().unwrap().iter().all(|p| p.as_f64().unwrap() < 1.0 - 1e-3));

    // without the loosened tolerance the non-orthogonal set is refused outright
    let out = run(&["simulate", "--construct", "weyl", "--d", "2", "--state", "0.7,0.3", "--message", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--set", p(&file), "--message", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "letter_out_of_range");
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("x.json");
    let out = Command::new(env!("CARGO_BIN_EXE_densecode"))
        .args(["construct", "phases", "--state", "0.4,0.35,0.25", "--n", "2", "--out", p(&file)])
        .env("DENSECODE_SEED", "12345")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config["seed"], 12345);
}
