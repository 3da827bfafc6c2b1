use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn duopoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duopoly"))
        .args(args)
        .env_remove("DUOPOLY_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = duopoly(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn constants_examples() {
    let v: Value = serde_json::from_str(&ok(&["constants", "--r", "1.5", "--json"])).unwrap();
    assert!((v["rho_c"].as_f64().unwrap() - 0.7887).abs() < 1e-4);
    assert!(v.get("at_rho").is_none());

    let v: Value = serde_json::from_str(&ok(&["constants", "--r", "1.5", "--rho", "0.85", "--json"])).unwrap();
    let at = &v["at_rho"];
    assert_eq!(at["regime"], "HighFidelity");
    assert!((at["theta_minus"].as_f64().unwrap() - 0.154).abs() < 1e-3);
    assert!((at["theta_plus"].as_f64().unwrap() - 0.846).abs() < 1e-3);

    let v: Value = serde_json::from_str(&ok(&["constants", "--r", "1.5", "--rho", "0.6", "--json"])).unwrap();
    assert_eq!(v["at_rho"]["regime"], "LowFidelity");
    assert!(v["at_rho"]["theta_minus"].is_null());
    assert!((v["at_rho"]["s"].as_f64().unwrap() - 12.0).abs() < 1e-9);

    let table = ok(&["constants", "--rho", "0.85"]);
    assert!(table.contains("theta_plus   0.846263"), "{table}");
}

#[test]
fn invalid_ranges_exit_2() {
    for args in [
        &["trajectory", "--rho", "0.3"][..],
        &["constants", "--r", "2.5"],
        &["selection", "--rho", "0.7", "--reps", "2"],
        &["sweep", "--rho", "1:0:0.1"],
        &["selection", "--b", "0"],
        &["trajectory", "--theta0", "1.0"],
    ] {
        let out = duopoly(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn deterministic_trajectory_reaches_collusive_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("det.csv");
    let stdout = ok(&["trajectory", "--deterministic", "--theta0", "0.5", "--rho", "0.85", "--r", "1.5", "--out", p(&out)]);
    assert!(stdout.contains("CollusivePlus"));
    let side = json(&dir.path().join("det.json"));
    assert_eq!(side["limit"], "CollusivePlus");
    assert!((side["theta_final"].as_f64().unwrap() - 0.846).abs() < 1e-3);
    assert!(side["stream_id"].is_null());
    assert!(read(&out).starts_with("n,theta\n0,0.5\n"));
}

#[test]
fn trajectory_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a/traj.csv");
    let b = dir.path().join("b/traj.csv");
    let args = ["trajectory", "--theta0", "0.5", "--rho", "0.85", "--b", "64", "--seed", "7", "--reps", "1", "--N", "20000"];
    ok(&[&args[..], &["--out", p(&a)]].concat());
    ok(&[&args[..], &["--out", p(&b)]].concat());
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a.with_extension("json")), read(&b.with_extension("json")));
    assert_eq!(json(&a.with_extension("json"))["config"]["seed"], 7);
}

#[test]
fn trajectory_replicas_get_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    ok(&["trajectory", "--reps", "3", "--N", "2000", "--b", "4", "--out", p(&out)]);
    let ids: Vec<u64> = (0..3)
        .map(|k| json(&dir.path().join(format!("t_rep{k}.json")))["stream_id"].as_u64().unwrap())
        .collect();
    assert!(ids[0] != ids[1] && ids[1] != ids[2]);
    assert!(!out.exists());
}

#[test]
fn selection_is_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("w1.csv");
    let many = dir.path().join("w8.csv");
    let args = ["selection", "--b", "4,16", "--reps", "24", "--N", "20000", "--seed", "3"];
    ok(&[&args[..], &["--workers", "1", "--out", p(&one)]].concat());
    ok(&[&args[..], &["--workers", "8", "--out", p(&many)]].concat());
    let body = read(&one);
    assert_eq!(body, read(&many));
    assert!(body.starts_with("b,theta0,p_plus_hat,ci_low,ci_high,collusive,competitive,undetermined,replications\n"));
    assert_eq!(body.lines().count(), 3);
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["tracking", "--b", "16,64", "--reps", "8", "--T", "5"];
    ok(&[&args[..], &["--out", p(&a)]].concat());
    let out = Command::new(env!("CARGO_BIN_EXE_duopoly"))
        .args([&args[..], &["--out", p(&b)]].concat())
        .env("DUOPOLY_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read(&a), read(&b));
}

#[test]
fn sidecar_round_trip_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    ok(&["lockin", "--b", "2,8", "--reps", "16", "--N", "4000", "--delta", "0.12", "--seed", "11", "--alpha", "0.7", "--eta", "1", "--out", p(&first)]);
    let side = json(&first.with_extension("json"));
    assert_eq!(side["command"], "lockin");
    assert!(side["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(side["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(side["config"]["learn"]["alpha"], 0.7);

    ok(&["lockin", "--config", p(&first.with_extension("json")), "--out", p(&second)]);
    assert_eq!(read(&first), read(&second));
    assert_eq!(json(&second.with_extension("json"))["config"], side["config"]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"theta0": 0.3, "reps": 5, "b": [8], "learn": {"horizon": 20000, "rho": 0.9}}"#).unwrap();
    let out = dir.path().join("sel.csv");
    ok(&["selection", "--config", p(&cfg), "--reps", "6", "--out", p(&out)]);
    let c = &json(&out.with_extension("json"))["config"];
    assert_eq!(c["reps"], 6);
    assert_eq!(c["theta0"], 0.3);
    assert_eq!(c["learn"]["rho"], 0.9);
    assert_eq!(c["learn"]["horizon"], 20000);
    assert_eq!(c["learn"]["alpha"], 2.0 / 3.0);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(duopoly(&["selection", "--config", p(&missing)]).status.code(), Some(4));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"learn": {"game": {"r": 3.0}}}"#).unwrap();
    assert_eq!(duopoly(&["selection", "--config", p(&bad)]).status.code(), Some(2));
}

#[test]
fn short_horizon_aborts_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sel.csv");
    let res = duopoly(&["selection", "--b", "4", "--reps", "10", "--N", "5", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--N"));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("x.csv");
    let res = duopoly(&["trajectory", "--deterministic", "--N", "100", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn deterministic_sweep_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["sweep", "--r", "1.5", "--rho", "0.6:0.9:0.15", "--theta0", "0.05:0.85:0.4", "--deterministic", "--out", p(&out)]);
    let body = read(&out);
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows[0], "rho,theta0,regime,theta_minus,theta_plus,limit_or_pplus,ci_low,ci_high");
    assert_eq!(rows.len(), 1 + 3 * 3);
    assert_eq!(rows[1], "0.6,0.05,LowFidelity,,,Competitive,,");
    assert!(rows[5].starts_with("0.75,0.45,LowFidelity,"));
    assert!(rows[7].starts_with("0.9,0.05,HighFidelity,"), "{}", rows[7]);
    assert!(rows[7].ends_with(",Competitive,,"));
    assert!(rows[8].ends_with(",CollusivePlus,,"));
}

#[test]
fn stochastic_sweep_and_width_run() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("s.csv");
    ok(&["sweep", "--rho", "0.9", "--theta0", "0.5", "--b", "16", "--reps", "8", "--N", "3000", "--out", p(&sweep)]);
    let row = read(&sweep).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("0.9,0.5,HighFidelity,"));
    assert_eq!(row.split(',').count(), 8);

    let width = dir.path().join("w.csv");
    ok(&[
        "width", "--b", "64", "--reps", "10", "--N", "3000", "--eta", "1", "--span", "0.3", "--resolution", "0.05", "--out", p(&width),
    ]);
    assert!(read(&width).starts_with("b,width,lower,upper,below_resolution\n64,"));
    let curve = read(&dir.path().join("w_curve.csv"));
    assert!(curve.starts_with("b,theta0,p_plus_hat,ci_low,ci_high,undetermined\n"));
}
