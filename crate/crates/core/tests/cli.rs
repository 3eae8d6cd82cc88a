use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sturm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sturm")).args(args).output().expect("spawn sturm")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read_json(p: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(Path::new(p)).unwrap()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn zero_potential_spectrum() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "zero.json", r#"{"fourier": {"cos": [], "sin": []}}"#);
    let out = sturm(&["spectrum", "--potential", &q, "--levels", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# {"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let n: f64 = row[0].parse().unwrap();
        let get = |i: usize| row[i].parse::<f64>().unwrap();
        assert!((get(1) - (PI * n).powi(2)).abs() < 1e-7);
        assert!((get(2) - (PI * n).powi(2)).abs() < 1e-7);
        assert!((get(3) - (PI * (n - 0.5)).powi(2)).abs() < 1e-7);
        assert!((get(4) - (PI * (n - 0.5)).powi(2)).abs() < 1e-7);
    }
}

#[test]
fn odd_ones_reflects_sine() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [], "sin": [1.0]}}"#);
    let out_path = path(&dir, "out.json");
    let out = sturm(&["involve", "--sigma", "odd-ones", "--potential", &q, "--out", &out_path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&out_path);
    let sin = v["fourier"]["sin"].as_array().unwrap();
    assert!((sin[0].as_f64().unwrap() + 1.0).abs() < 1e-6);
    for c in v["fourier"]["cos"].as_array().unwrap().iter().chain(&sin[1..]) {
        assert!(c.as_f64().unwrap().abs() < 1e-6);
    }
}

#[test]
fn verify_all_ones_on_mixed_potential() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [2.0], "sin": [1.0]}}"#);
    let report = path(&dir, "report.json");
    let out = sturm(&["verify", "t1", "--potential", &q, "--levels", "12", "--out", &report]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = read_json(&report);
    assert_eq!(v["passed"], true);
    assert_eq!(v["settings"]["levels"], 12);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        assert!(c["residual"].as_f64().unwrap() < 1e-5, "{c}");
    }
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let csv = path(&dir, &format!("s{tag}.csv"));
        let maps = path(&dir, &format!("m{tag}.json"));
        let out = sturm(&["spectrum", "--seed", "11", "--modes", "4", "--levels", "6", "--csv", &csv, "--maps", &maps]);
        assert_eq!(out.status.code(), Some(0));
        (std::fs::read(csv).unwrap(), std::fs::read(maps).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    let one = sturm(&["--threads", "1", "discriminant", "--seed", "2", "--points", "50"]);
    let many = sturm(&["--threads", "4", "discriminant", "--seed", "2", "--points", "50"]);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn maps_file_reconstructs_its_potential() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [0.6, -0.2], "sin": [0.3]}}"#);
    let maps = path(&dir, "maps.json");
    let csv = path(&dir, "s.csv");
    assert_eq!(sturm(&["spectrum", "--potential", &q, "--levels", "12", "--csv", &csv, "--maps", &maps]).status.code(), Some(0));
    let out_path = path(&dir, "rec.json");
    let report = path(&dir, "rec_report.json");
    let out = sturm(&["reconstruct", "--target", &maps, "--out", &out_path, "--report", &report]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&out_path);
    let cos: Vec<f64> = v["fourier"]["cos"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    let sin: Vec<f64> = v["fourier"]["sin"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    assert!((cos[0] - 0.6).abs() < 1e-5 && (cos[1] + 0.2).abs() < 1e-5 && (sin[0] - 0.3).abs() < 1e-5);
    assert_eq!(read_json(&report)["converged"], true);
}

#[test]
fn oracle_compare_agrees() {
    let out = sturm(&["oracle-compare", "--seed", "5", "--bc", "ND", "--levels", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[6] == "true"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"fourier": {"cos": [1, "x"]}}"#);
    let out = sturm(&["spectrum", "--potential", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [1.0]}}"#);
    assert_eq!(sturm(&["spectrum", "--potential", &q, "--csv", &q]).status.code(), Some(2));
    assert_eq!(sturm(&["involve", "--potential", &q, "--sigma", "1,x"]).status.code(), Some(2));
    assert_eq!(sturm(&["spectrum", "--potential", &q, "--levels", "100000"]).status.code(), Some(2));
    assert_eq!(sturm(&["verify", "t3", "--potential", &q]).status.code(), Some(2));
    assert_eq!(sturm(&["reconstruct", "--target", &q]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3_with_partial_report() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [1.5], "sin": [0.8]}}"#);
    let report = path(&dir, "r.json");
    let out = sturm(&[
        "involve", "--sigma", "all-ones", "--potential", &q, "--max-iter", "1", "--residual-tol", "1e-14", "--report", &report,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = read_json(&report);
    assert_eq!(v["converged"], false);
    assert_eq!(v["settings"]["max_iter"], 1);
}

#[test]
fn verification_failure_exits_1() {
    // a residual tolerance this loose stops Newton at the warm start, so q• = q
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"fourier": {"cos": [1.5], "sin": [0.8]}}"#);
    let report = path(&dir, "r.json");
    let out = Command::new(env!("CARGO_BIN_EXE_sturm"))
        .args(["verify", "t1", "--potential", &q, "--out", &report])
        .env("STURM_RESIDUAL_TOL", "1e3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&report);
    assert_eq!(v["passed"], false);
    assert_eq!(v["settings"]["residual_tol"], 1000.0);
}
