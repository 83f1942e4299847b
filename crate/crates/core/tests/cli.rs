use std::path::PathBuf;
use std::process::{Command, Output};

fn ncup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncup"))
        .args(args)
        .env_remove("NCUP_DEFAULT_TOL")
        .output()
        .expect("run ncup")
}

fn instance(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("instances")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_pauli_passes_with_zero_nh_v_margin() {
    let o = ncup(&["verify", "--in", &instance("pauli.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("NH-v ")).unwrap();
    assert!(line.contains("pass") && line.contains("margin 0.000e0"), "{line}");
}

#[test]
fn verify_structured_contains_full_precision_margins() {
    let o = ncup(&["verify", "--in", &instance("pauli.json"), "--format", "structured"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let nh_v = rows.iter().find(|r| r["statement"] == "NH-v").unwrap();
    assert_eq!(nh_v["evaluation"]["margin"].as_f64(), Some(0.0));
    assert_eq!(nh_v["evaluation"]["status"], "evaluated");
}

#[test]
fn verify_rejects_non_selfadjoint_operator() {
    let o = ncup(&["verify", "--in", &instance("not_selfadjoint.json")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("‖a − a*‖ = 1.000e0"), "{}", stderr(&o));
}

#[test]
fn verify_unnormalized_state() {
    let path = instance("unnormalized.json");
    assert_eq!(code(&ncup(&["verify", "--in", &path, "--normalize-state", "false"])), 2);
    assert_eq!(code(&ncup(&["verify", "--in", &path])), 2);
    assert_eq!(code(&ncup(&["verify", "--in", &path, "--normalize-state", "true"])), 0);
}

#[test]
fn verify_malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"signature\": [1],\n  \"rank\": 2,\n  \"bogus\": 1\n}\n").unwrap();
    let o = ncup(&["verify", "--in", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("bogus") && err.contains("line"), "{err}");
}

#[test]
fn verify_noncommutative_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncup(&[
        "fuzz", "--signature", "2", "--rank", "2", "--count", "20", "--seed", "3",
        "--violations", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let replay = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("NH-i-violation"))
        .expect("NH-i violation payload");
    let o = ncup(&["verify", "--in", replay.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).lines().any(|l| l.starts_with("NH-i ") && l.contains("FAIL")));
}

#[test]
fn fuzz_scalar_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = ncup(&[
            "fuzz", "--signature", "1", "--rank", "3", "--count", "1000", "--seed", "7",
            "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn fuzz_rejects_zero_count() {
    let o = ncup(&["fuzz", "--signature", "1", "--rank", "2", "--count", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fuzz_rejects_bad_signature() {
    assert_eq!(code(&ncup(&["fuzz", "--signature", "2,x", "--rank", "2", "--count", "3"])), 2);
    assert_eq!(code(&ncup(&["fuzz", "--signature", "0", "--rank", "2", "--count", "3"])), 2);
}

#[test]
fn explore_nh_v_scalar_joint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("search.json");
    let o = ncup(&[
        "explore", "--statement", "NH-v", "--signature", "1", "--rank", "2", "--mode", "joint",
        "--iters", "300", "--restarts", "4", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["best_margin"].as_f64().unwrap() <= 1e-6);
    assert!(v["counterexample"].is_null());

    let best = dir.path().join("best.json");
    std::fs::write(&best, serde_json::to_string(&v["best_instance"]).unwrap()).unwrap();
    assert_eq!(code(&ncup(&["verify", "--in", best.to_str().unwrap()])), 0);
}

#[test]
fn explore_counterexample_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("search.json");
    let o = ncup(&[
        "explore", "--statement", "nh-i", "--signature", "2", "--rank", "2", "--iters", "40",
        "--restarts", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let cx = dir.path().join("search.counterexample.json");
    assert_eq!(code(&ncup(&["verify", "--in", cx.to_str().unwrap()])), 1);
}

#[test]
fn explore_state_only_needs_operators() {
    let o = ncup(&["explore", "--statement", "NH-v", "--mode", "state-only"]);
    assert_eq!(code(&o), 2);
    let o = ncup(&[
        "explore", "--statement", "NH-v", "--mode", "state-only", "--in", &instance("pauli.json"),
        "--iters", "20", "--restarts", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn explore_unknown_statement() {
    let o = ncup(&["explore", "--statement", "NH-x"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown statement"));
}

#[test]
fn axioms_pass_and_digest_is_stable() {
    let run = || ncup(&["axioms", "--signature", "2,1", "--rank", "2", "--samples", "500", "--seed", "5"]);
    let (a, b) = (run(), run());
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    let digest = |o: &Output| stdout(o).lines().last().unwrap().to_string();
    assert_eq!(digest(&a), digest(&b));
}

#[test]
fn axioms_reject_zero_samples() {
    assert_eq!(code(&ncup(&["axioms", "--signature", "1", "--rank", "2", "--samples", "0"])), 2);
}

#[test]
fn env_tolerance_applies_and_is_validated() {
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_ncup"))
            .args(["verify", "--in", &instance("pauli.json"), "--format", "structured"])
            .env("NCUP_DEFAULT_TOL", tol)
            .output()
            .unwrap()
    };
    let o = run("1e-3");
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tolerances"]["verdict"].as_f64(), Some(1e-3));
    assert_eq!(code(&run("not-a-number")), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&ncup(&[])), 2);
    assert_eq!(code(&ncup(&["verify"])), 2);
    assert_eq!(code(&ncup(&["verify", "--in", "/nonexistent/file.json"])), 2);
    assert_eq!(code(&ncup(&["--help"])), 0);
}
