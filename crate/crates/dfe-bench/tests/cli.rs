//! CLI contract tests: exit codes, subcommand output shapes, and the
//! optimize/estimate weight-file round trip.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dfe-bench"))
}

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dfe-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn groups_counts_and_listing() {
    let out = bin()
        .args([
            "groups", "--target", "ghz", "--n", "4", "--method", "analytic",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("groups 10"), "{text}");
    assert!(text.contains("ZZZZ"));
    let out = bin()
        .args(["groups", "--target", "w", "--n", "5", "--method", "si"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("groups 54"), "{text}");
}

#[test]
fn config_errors_exit_2() {
    // missing config file
    let out = bin()
        .args(["bench", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // estimator/target mismatch
    let dir = tmpdir("cfg2");
    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"target":"haar","n":3,"estimator":"oasis_st","l":10,"m":1,"trials":2}"#,
    )
    .unwrap();
    let out = bin()
        .args(["bench", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("structured"), "{msg}");
    // wrong budget form for the sampler
    std::fs::write(
        &bad,
        r#"{"target":"ghz","n":3,"estimator":"oasis_gt","l":10,"m":1,"trials":2}"#,
    )
    .unwrap();
    let out = bin()
        .args(["bench", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // large program without the opt-in
    let out = bin()
        .args([
            "optimize",
            "--target",
            "ghz",
            "--n",
            "5",
            "--out",
            dir.join("w").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numerical_errors_exit_3() {
    let dir = tmpdir("num3");
    let weights = dir.join("corrupt.txt");
    std::fs::write(&weights, "# target ghz\nn 2\nXQ 00 1.0\n").unwrap();
    let out = bin()
        .args([
            "estimate",
            "--weights",
            weights.to_str().unwrap(),
            "--shots",
            "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn optimize_estimate_round_trip() {
    let dir = tmpdir("roundtrip");
    let weights = dir.join("w2.txt");
    let out = bin()
        .args([
            "optimize",
            "--target",
            "w",
            "--n",
            "2",
            "--out",
            weights.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("objective 1.0000"), "{text}");
    let out = bin()
        .args([
            "estimate",
            "--weights",
            weights.to_str().unwrap(),
            "--shots",
            "40000",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let est: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("estimate "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    // true fidelity 0.925; 40k shots of a bounded estimator land within ~0.01
    assert!((est - 0.925).abs() < 0.015, "estimate {est}");
    assert!(text.contains("true_fidelity 0.925"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn tables_group_grid() {
    let out = bin().args(["tables", "--which", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("target,n,method,groups"));
    assert!(text.contains("ghz,6,analytic,34"));
    assert!(text.contains("w,4,analytic,14"));
    assert!(text.contains("w,4,si,24"));
    let out = bin().args(["tables", "--which", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
