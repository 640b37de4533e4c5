//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_starpde"))
}

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn validate_passes_on_well_posed_problem() {
    let path = problem("constant_one.json");
    let out = run(&["--mode", "validate", "--problem", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("validation: PASS"), "stdout: {text}");
    assert!(!text.contains("FAIL"), "stdout: {text}");
}

#[test]
fn validate_checks_every_corpus_problem() {
    for name in [
        "constant_one.json",
        "heat_bump.json",
        "mixed_small.json",
        "classical_steady.json",
        "classical_heat.json",
    ] {
        let path = problem(name);
        let out = run(&["--mode", "validate", "--problem", path.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name} failed validation: {}{}",
            stdout(&out),
            stderr(&out)
        );
    }
}

#[test]
fn solve_writes_constant_solution() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = problem("constant_one.json");
    let out = run(&[
        "--mode",
        "solve-local-time",
        "--problem",
        path.to_str().unwrap(),
        "--nt",
        "8",
        "--nx",
        "16",
        "--nl",
        "8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    // One plane file per level, each covering every step, ray, and node.
    for p in 0..=8 {
        let name = format!("level_{p:04}.csv");
        let csv_text = std::fs::read_to_string(dir.path().join(&name)).expect(&name);
        assert!(csv_text.starts_with("t,ray,x,u\r\n"), "{name}: {csv_text}");
        let mut rows = 0usize;
        for line in csv_text.lines().skip(1).filter(|l| !l.is_empty()) {
            let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!(
                (value - 1.0).abs() < 1e-10,
                "constant-data solution should stay 1, got {value}"
            );
            rows += 1;
        }
        // (n_t + 1) steps x 3 rays x (n_x + 1) nodes.
        assert_eq!(rows, 9 * 3 * 17, "{name}");
    }

    assert!(dir.path().join("summary.json").is_file());
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn certify_reruns_are_byte_identical() {
    let path = problem("constant_one.json");
    let mut snapshots: Vec<(String, String)> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("tempdir");
        let out = run(&[
            "--mode",
            "certify",
            "--problem",
            path.to_str().unwrap(),
            "--nt",
            "8",
            "--nx",
            "16",
            "--nl",
            "8",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        assert!(stdout(&out).contains("certificate: PASS"));
        let certificate =
            std::fs::read_to_string(dir.path().join("certificate.json")).expect("certificate");
        let manifest =
            std::fs::read_to_string(dir.path().join("manifest.json")).expect("manifest");
        snapshots.push((certificate, manifest));
    }
    assert_eq!(
        snapshots[0], snapshots[1],
        "outputs must not depend on run time or directory"
    );
    // The manifest records the certificate's digest; sanity-check the format.
    assert!(snapshots[0].1.contains("certificate.json"));
}

#[test]
fn negative_slack_turns_a_pass_into_exit_four() {
    let path = problem("classical_steady.json");
    let ok = run(&["--mode", "certify", "--problem", path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", stderr(&ok));

    let tight = run(&[
        "--mode",
        "certify",
        "--problem",
        path.to_str().unwrap(),
        "--slack",
        "-0.9",
    ]);
    assert_eq!(tight.status.code(), Some(4), "stdout: {}", stdout(&tight));
    assert!(stderr(&tight).contains("certificate failed"));
}

#[test]
fn converge_reports_expected_orders() {
    let out = run(&["--mode", "converge", "--scheme", "centered", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let order_for = |axis: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.starts_with(axis))
            .unwrap_or_else(|| panic!("missing {axis} line in: {text}"));
        line.split("order ")
            .nth(1)
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(|tok| tok.parse().ok())
            .unwrap_or_else(|| panic!("unparsable order in: {line}"))
    };
    assert!((order_for("time") - 1.0).abs() < 0.4, "{text}");
    assert!((order_for("space") - 2.0).abs() < 0.4, "{text}");
    assert!((order_for("level") - 1.0).abs() < 0.4, "{text}");
}

#[test]
fn compare_passes_on_corpus_problem() {
    let path = problem("heat_bump.json");
    let out = run(&[
        "--mode",
        "compare",
        "--problem",
        path.to_str().unwrap(),
        "--nt",
        "8",
        "--nx",
        "16",
        "--nl",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("comparison: PASS"));
}

#[test]
fn naive_beta_inflates_the_scheme_defect() {
    let path = problem("heat_bump.json");
    let args = |extra: &[&str]| {
        let mut v = vec![
            "--mode".to_string(),
            "solve-local-time".to_string(),
            "--problem".to_string(),
            path.to_str().unwrap().to_string(),
            "--nt".to_string(),
            "8".to_string(),
            "--nx".to_string(),
            "16".to_string(),
            "--nl".to_string(),
            "8".to_string(),
        ];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let defect = |output: &Output| -> f64 {
        let text = stdout(output);
        text.lines()
            .find(|l| l.contains("scheme defect"))
            .and_then(|l| l.rsplit(' ').next())
            .and_then(|tok| tok.parse().ok())
            .unwrap_or_else(|| panic!("no scheme defect in: {text}"))
    };
    let compliant = bin().args(args(&[])).output().expect("run");
    assert_eq!(compliant.status.code(), Some(0));
    let naive = bin().args(args(&["--naive-beta"])).output().expect("run");
    assert_eq!(naive.status.code(), Some(0));
    assert!(
        defect(&naive) > 10.0 * defect(&compliant).max(1e-12),
        "naive defect {} vs compliant {}",
        defect(&naive),
        defect(&compliant)
    );
}

#[test]
fn tampered_declared_norms_fail_the_certificate() {
    // Declared norm bounds feed the a priori constants. Understating the
    // data norms shrinks every constant, so the observed solution (still
    // identically 1) overshoots its certified bound.
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(problem("constant_one.json")).unwrap())
            .unwrap();
    doc["norms"] = serde_json::json!({ "g_sup": 0.01, "psi_sup": 0.01 });
    let dir = tempfile::tempdir().expect("tempdir");
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = run(&["--mode", "certify", "--problem", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("certificate failed"));
}

#[test]
fn missing_problem_flag_is_a_usage_error() {
    let out = run(&["--mode", "solve-local-time"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("requires --problem"));
}

#[test]
fn unreadable_problem_path_is_a_usage_error() {
    let out = run(&[
        "--mode",
        "validate",
        "--problem",
        "/nonexistent/problem.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classical_problem_is_rejected_by_compare() {
    let path = problem("classical_steady.json");
    let out = run(&["--mode", "compare", "--problem", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("local-time"));
}
