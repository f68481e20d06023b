use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logit-bandit"))
}

const CONFIG: &str = "\
instance.d = 2
instance.s = 1
arms.kind = fixed_finite
arms.k = 4
horizon = 5
replications = 2
policies = log_ucb_1, random
lambda = 1
martingale.runs = 100
";

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "3", "--threads", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * 2 * 5);

    let status = bin().args(["figure2", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("figure2.csv").is_file());

    let status = bin().args(["martingale", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("martingale.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "horizon = 0\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));

    let missing = bin().args(["run", "--config", "/nonexistent/x.conf"]).status().unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn other_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, CONFIG).unwrap();
    // the output path is a regular file, so writing fails
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let status = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&blocker).status().unwrap();
    assert_eq!(status.code(), Some(3));
}
