use std::path::Path;
use std::process::{Command, Output};

fn normflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normflow")).args(args).current_dir(dir).output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let j = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[j].parse().unwrap()).collect()
}

#[test]
fn flow_risk_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = normflow(dir.path(), &["flow", "--seed", "3", "--t-end", "0.5", "--out", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("run/trajectory.csv"));
    assert_eq!(rows.len(), 501);
    // (1, 8, 1): 8·2 hidden parameters and 9 output parameters
    assert_eq!(header.iter().filter(|h| h.starts_with("theta")).count(), 25);
    let risk = column(&header, &rows, "risk");
    assert!(risk.windows(2).all(|w| w[1] <= w[0] + 1e-8));
    let dev = column(&header, &rows, "psi_max_dev");
    assert!(dev.iter().all(|&d| d <= 1e-12));
}

#[test]
fn summary_echoes_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), "architecture = [1, 3, 1]\nseed = 5\n[gd]\nsteps = 20\ngamma = 0.05\n")
        .unwrap();
    let out = normflow(dir.path(), &["gd", "--config", "exp.toml", "--out", "gd"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("gd/summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["config"]["mode"], "gd");
    assert_eq!(v["config"]["architecture"], serde_json::json!([1, 3, 1]));
    assert_eq!(v["config"]["gd"]["steps"], 20);
    let (_, rows) = read_csv(&dir.path().join("gd/trajectory.csv"));
    assert_eq!(rows.len(), 21);
}

#[test]
fn empty_regime_start_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("z.toml"),
        "target = { kind = \"constant\", value = 0.0 }\n[init]\nstate = [0.0, -1.0, 2.0]\n",
    )
    .unwrap();
    let out = normflow(dir.path(), &["one-neuron", "--config", "z.toml", "--out", "z"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("z/trajectory.csv"));
    assert_eq!(rows.len(), 2);
    let j = header.iter().position(|h| h == "regime").unwrap();
    assert_eq!(rows[0][j], "empty");
    let theta = |r: &Vec<String>| r[1..4].to_vec();
    assert_eq!(theta(&rows[0]), theta(&rows[1]));
    assert_eq!(column(&header, &rows, "t")[1], 100.0);
}

#[test]
fn several_one_neuron_runs_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[flow]\nt_end = 1.0\n[one_neuron]\ntrajectories = 2\n").unwrap();
    let out = normflow(dir.path(), &["one-neuron", "--config", "c.toml", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for d in ["run_0000", "run_0001"] {
        assert!(dir.path().join("o").join(d).join("trajectory.csv").is_file());
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
    assert_eq!(v["blow_ups"], 0);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &str, &str); 4] = [
        ("bad1.toml", "unknown_field = 1\n", "unknown_field"),
        ("bad2.toml", "architecture = [1, 2, 1]\n", "architecture"),
        ("bad3.toml", "mode = \"flow\"\n", "mode"),
        ("bad4.toml", "[flow]\nstep = -1.0\n", "step"),
    ];
    for (name, body, field) in cases {
        std::fs::write(dir.path().join(name), body).unwrap();
        let out = normflow(dir.path(), &["one-neuron", "--config", name, "--out", "x"]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{name}: {err}");
    }
    let out = normflow(dir.path(), &["gd", "--gamma", "-1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = normflow(dir.path(), &["flow", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integrator_flag_is_checked_by_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let out = normflow(dir.path(), &["flow", "--integrator", "leapfrog"]);
    assert!(!out.status.success());
    let out = normflow(dir.path(), &["flow", "--integrator", "euler", "--t-end", "0.01", "--out", "e"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
