//! End-to-end runs of the binary: exit codes, file layout and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grandcouple_core::diagnostics::{ar_marginal, hellinger_sq_gaussian};
use grandcouple_core::Measure;
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{sub}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{sub}.csv"));
    let o = Command::new(env!("CARGO_BIN_EXE_grandcouple"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (o, out)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_owned).collect()
}

const MULTI: &str = r#"{"seed": 5, "multimarginal": {"family": "random-sparse-discrete", "c": [2, 6], "states": 12, "support": 4}}"#;

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("multimarginal", "{not json"),
        ("multimarginal", r#"{"seed": 1, "bogus": 3}"#),
        ("meet", r#"{"seed": 1}"#),
        (
            "multimarginal",
            r#"{"seed": 1, "multimarginal": {"family": "nope"}}"#,
        ),
        (
            "harmonize",
            r#"{"seed": 1, "harmonize": {"n": 10, "m": 4}}"#,
        ),
        (
            "meet",
            r#"{"seed": 1, "meet": {"family": "gaussian", "c": [0]}}"#,
        ),
    ];
    for (sub, cfg) in cases {
        let (o, _) = run(dir.path(), sub, cfg, &["--reps", "2"]);
        assert_eq!(
            code(&o),
            2,
            "{sub} {cfg}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = Command::new(env!("CARGO_BIN_EXE_grandcouple"))
        .args(["meet", "--config", "/nonexistent/x.json"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn censoring_breach_exits_3_after_writing() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "meet": {"family": "gaussian", "d": [4], "c": [16], "methods": ["star-2step"], "max_iter": 2, "max_censor_rate": 0.0}}"#;
    let (o, out) = run(dir.path(), "meet", cfg, &["--reps", "5"]);
    assert_eq!(code(&o), 3);
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    let h = header(&out);
    let censored = h.iter().position(|c| c == "censored").unwrap();
    assert_eq!(r[0][censored], "5");
    assert!(out.with_extension("meta.json").exists());
}

#[test]
fn byte_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let (a, pa) = run(
        dir.path(),
        "multimarginal",
        MULTI,
        &["--reps", "300", "--workers", "1"],
    );
    assert_eq!(code(&a), 0);
    let first = fs::read(&pa).unwrap();
    let (b, pb) = run(
        dir.path(),
        "multimarginal",
        MULTI,
        &["--reps", "300", "--workers", "1"],
    );
    assert_eq!(code(&b), 0);
    assert_eq!(first, fs::read(&pb).unwrap());
    let (c, pc) = run(
        dir.path(),
        "multimarginal",
        MULTI,
        &["--reps", "300", "--workers", "3"],
    );
    assert_eq!(code(&c), 0);
    let mut x = rows(&pa);
    let mut y = rows(&pc);
    x.sort();
    y.sort();
    assert_eq!(x, y);
    let (d, pd) = run(
        dir.path(),
        "multimarginal",
        MULTI,
        &["--reps", "300", "--seed", "6"],
    );
    assert_eq!(code(&d), 0);
    assert_ne!(first, fs::read(&pd).unwrap());
}

#[test]
fn meet_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 3, "meet": {"family": "gaussian", "d": [2], "c": [1, 4]}}"#;
    let (a, pa) = run(dir.path(), "meet", cfg, &["--reps", "40", "--workers", "1"]);
    assert_eq!(code(&a), 0);
    let one = (
        fs::read(&pa).unwrap(),
        fs::read(dir.path().join("meet_replicates.csv")).unwrap(),
    );
    let (b, pb) = run(dir.path(), "meet", cfg, &["--reps", "40", "--workers", "4"]);
    assert_eq!(code(&b), 0);
    let four = (
        fs::read(&pb).unwrap(),
        fs::read(dir.path().join("meet_replicates.csv")).unwrap(),
    );
    assert_eq!(one, four);
    let h = header(&pa);
    let (c, tau) = (
        h.iter().position(|x| x == "C").unwrap(),
        h.iter().position(|x| x == "mean_tau").unwrap(),
    );
    for r in rows(&pa).iter().filter(|r| r[c] == "1") {
        assert_eq!(r[tau], "0.0");
    }
}

#[test]
fn sidecar_contents() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "multimarginal",
        MULTI,
        &["--reps", "50", "--seed", "77"],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.with_extension("meta.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "multimarginal");
    assert_eq!(v["seed"], 77);
    assert_eq!(v["replicates"], 50);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert!(v["git_revision"].is_string());
    assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["rows"], 2 * 4);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    assert_eq!(
        header(&out),
        ["family", "C", "coupler", "mean_g", "se", "n", "lower_bound"]
    );
}

#[test]
fn identical_marginals() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "multimarginal": {"family": "identical", "c": [1, 3, 9], "couplers": ["list", "list-random", "poisson", "random-anchor", "fixed-anchor", "random-sequence"]}}"#;
    let (o, out) = run(dir.path(), "multimarginal", cfg, &["--reps", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&out);
    let (g, se) = (
        h.iter().position(|x| x == "mean_g").unwrap(),
        h.iter().position(|x| x == "se").unwrap(),
    );
    let r = rows(&out);
    assert_eq!(r.len(), 18);
    for row in r {
        let mean: f64 = row[g].parse().unwrap();
        if row[2].starts_with("list") && row[1] != "1" {
            // One partner per recursion round; the rest redraw from the base.
            assert!(mean > 1.0);
        } else {
            assert_eq!(mean, 1.0);
            assert_eq!(row[se], "0.0");
        }
    }
}

#[test]
fn harmonize_trace_invariants() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 2, "harmonize": {"n": 200, "m": 4, "d": 3, "horizon": 60}}"#;
    let (o, out) = run(dir.path(), "harmonize", cfg, &["--reps", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&out);
    let col = |n: &str| h.iter().position(|x| x == n).unwrap();
    let r = rows(&out);
    assert_eq!(r.len(), 2 * 61);
    let Measure::GaussianDiag(p0) = ar_marginal(0, 0.9, 3).unwrap() else {
        unreachable!()
    };
    let Measure::GaussianDiag(p) = Measure::gaussian(vec![0.0; 3], vec![1.0; 3]).unwrap() else {
        unreachable!()
    };
    let h0 = hellinger_sq_gaussian(&p0, &p).unwrap();
    for row in &r {
        let rel: f64 = row[col("total_weight_rel")].parse().unwrap();
        assert!((rel - 1.0).abs() < 1e-9);
        if row[col("t")] == "0" {
            let e: f64 = row[col("exact_hellinger")].parse().unwrap();
            assert!((e - h0).abs() < 1e-12);
        }
    }
    let exact: Vec<f64> = r
        .iter()
        .take(61)
        .map(|row| row[col("exact_hellinger")].parse().unwrap())
        .collect();
    assert!(exact.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn diagnose_student_t_is_vacuous() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 4, "diagnose": {"family": "student-t", "d": [1], "c": [4], "table_d": [1], "table_c": [4], "horizon": 30, "alpha_samples": 20000}}"#;
    let (o, out) = run(dir.path(), "diagnose", cfg, &["--reps", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&out);
    let (j, v) = (
        h.iter().position(|x| x == "johnson").unwrap(),
        h.iter().position(|x| x == "johnson_vacuous").unwrap(),
    );
    for row in rows(&out) {
        assert_eq!(row[v], "true");
        assert_eq!(row[j], "");
    }
    let alpha = dir.path().join("diagnose_alpha.csv");
    let ah = header(&alpha);
    let av = ah.iter().position(|x| x == "johnson_vacuous").unwrap();
    assert!(rows(&alpha).iter().all(|r| r[av] == "true"));
}

#[test]
fn runtime_rows_and_single_gaussian_cap() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 8, "runtime": {"c": 4, "d": [1, 16], "max_d_single": 8}}"#;
    let (o, out) = run(dir.path(), "runtime", cfg, &["--reps", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out);
    let keys: Vec<(String, String)> = r.iter().map(|x| (x[0].clone(), x[1].clone())).collect();
    assert_eq!(
        keys,
        [
            ("barycenter", "1"),
            ("barycenter", "16"),
            ("single-gaussian", "1")
        ]
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
    );
}
