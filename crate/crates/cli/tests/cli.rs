use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn pphi2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pphi2")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pphi2(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn digest(bytes: &[u8]) -> Vec<u8> {
    Sha256::digest(bytes).to_vec()
}

const GAP_SCAN: &str = r#"
seed = 3

[model]
length = 2.0
boundary = "periodic"
nodes = 8
example = { a = 1.0, x0 = 1.0 }

[task]
kind = "gap-scan"
lambdas = [2.0, 3.0, 4.0]
modes = 1
n_max = 80
"#;

const FREE_AGMON: &str = r#"
[model]
length = 6.283185307179586
boundary = "periodic"
nodes = 16

[task]
kind = "agmon"
from = { kind = "zero" }
to = { kind = "mode", index = 1 }
"#;

const INSTANTON: &str = r#"
[model]
length = 2.0
boundary = "periodic"
nodes = 8
example = { a = 1.0, x0 = 1.0 }

[task]
kind = "instanton"
from = { kind = "constant", value = -1.0 }
to = { kind = "constant", value = 1.0 }
half_widths = [2.0]
dt = 0.1
"#;

#[test]
fn gap_scan_csv_columns_and_headers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "scan.toml", GAP_SCAN);
    let out = tmp.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hash = report(&out)["config_hash"].as_str().unwrap().to_string();
    let csv = fs::read_to_string(out.join("table.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("# pphi2 {} config-hash {hash}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "lambda,E1,E2,gap,log_gap,slope");
    assert_eq!(lines.len(), 5);
    // First row has no slope; later rows parse completely.
    assert!(lines[2].ends_with(','));
    for line in &lines[3..] {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 6);
        assert!(cells[3] > 0.0 && (cells[4] - cells[3].ln()).abs() < 1e-12);
    }
    let plot = fs::read_to_string(out.join("plot.dat")).unwrap();
    assert!(plot.starts_with(&format!("# pphi2 {} config-hash {hash}\n", env!("CARGO_PKG_VERSION"))));
    let points: Vec<Vec<f64>> = plot
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(points.len(), 3);
    assert!(points.iter().all(|p| p.len() == 2));
}

#[test]
fn identical_runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    for (name, text) in [("scan.toml", GAP_SCAN), ("inst.toml", INSTANTON)] {
        let cfg = write_config(tmp.path(), name, text);
        let mut digests = Vec::new();
        for (i, threads) in ["1", "3"].iter().enumerate() {
            let out = tmp.path().join(format!("{name}-{i}"));
            let o = run_config(&cfg, &out, &["--threads", threads]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let mut r = report(&out);
            assert!(r["timing"]["task_seconds"].as_f64().unwrap() >= 0.0);
            r.as_object_mut().unwrap().remove("timing");
            let mut d = vec![digest(serde_json::to_string(&r).unwrap().as_bytes())];
            for file in ["table.csv", "plot.dat"] {
                if let Ok(bytes) = fs::read(out.join(file)) {
                    d.push(digest(&bytes));
                }
            }
            digests.push(d);
        }
        assert_eq!(digests[0], digests[1], "{name}");
    }
}

#[test]
fn seed_override_changes_config_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "inst.toml", INSTANTON);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_config(&cfg, &a, &[]).status.success());
    assert!(run_config(&cfg, &b, &["--seed", "11"]).status.success());
    let (ra, rb) = (report(&a), report(&b));
    assert_ne!(ra["config_hash"], rb["config_hash"]);
    assert_eq!(rb["config"]["seed"], 11);
}

#[test]
fn free_field_agmon_distance() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "agmon.toml", FREE_AGMON);
    let out = tmp.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    let d = r["results"]["distance"].as_f64().unwrap();
    assert!((d - 0.353553).abs() < 1e-5, "{d}");
}

#[test]
fn json_config_accepted() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "spec.json",
        r#"{"model": {"length": 1.0, "boundary": "periodic", "nodes": 4, "polynomial": [0.0, 0.0, 0.75]},
            "task": {"kind": "spectrum", "lambda": 1.0, "modes": 1, "n_max": 200, "count": 2}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e1 = report(&out)["results"]["eigenvalues"][0].as_f64().unwrap();
    assert!((e1 + 0.25).abs() < 1e-6, "{e1}");
}

#[test]
fn invalid_boundary_exits_1_naming_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &FREE_AGMON.replace("\"periodic\"", "\"mobius\""));
    let out = tmp.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.boundary") && err.contains("mobius"), "{err}");
    assert!(!out.join("report.json").exists());
}

#[test]
fn other_validation_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (GAP_SCAN.replace("[2.0, 3.0, 4.0]", "[3.0, 2.0]"), "task.lambdas"),
        (GAP_SCAN.replace("nodes = 8", "nodes = 0"), "model.nodes"),
        (GAP_SCAN.replace("length = 2.0", "length = -2.0"), "model.length"),
        (GAP_SCAN.replace("modes = 1", "modes = 12"), "task.modes"),
        (GAP_SCAN.replace("n_max = 80", "n_max = 2"), "N_max"),
        (GAP_SCAN.replace("gap-scan", "gap-scna"), "config"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.toml"), text);
        let o = run_config(&cfg, &tmp.path().join(format!("o{i}")), &[]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(1), "{field}: {err}");
        assert!(err.contains(field), "{field}: {err}");
    }
    let o = pphi2(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_2_with_partial_report() {
    let tmp = TempDir::new().unwrap();
    // Newton cannot reach the default tolerance in one step.
    let cfg = write_config(
        tmp.path(),
        "inst.toml",
        &INSTANTON.replace("dt = 0.1", "dt = 0.1\nmax_iterations = 1"),
    );
    let out = tmp.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "numerical-failure");
    assert!(r["results"]["action"].as_f64().is_some());
    assert_eq!(r["diagnostics"]["converged"], false);

    // A Fock basis beyond the state budget fails before producing results.
    let cfg = write_config(
        tmp.path(),
        "big.toml",
        &GAP_SCAN.replace("modes = 1", "modes = 6").replace("n_max = 80", "n_max = 60"),
    );
    let out = tmp.path().join("big");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "numerical-failure");
    assert!(r["results"].is_null());
    assert!(r["error"].as_str().unwrap().contains("budget"));
}

#[test]
fn verify_suites_name_their_checks() {
    for (suite, expected) in [
        ("paper-values", "tanh instanton action = 8/3 ±2%"),
        ("oracles", "one-mode Bogoliubov vs HS formula"),
        ("invariants", "ℓ ≤ √e sweep"),
    ] {
        let o = pphi2(&["verify", suite]);
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(o.status.success(), "{suite}: {text}");
        let line = text.lines().find(|l| l.contains(expected)).unwrap_or_else(|| panic!("{suite}: {text}"));
        assert!(line.starts_with("PASS") && line.contains('['), "{line}");
    }
}

#[test]
fn verify_writes_checks_json() {
    let tmp = TempDir::new().unwrap();
    let o = pphi2(&["verify", "oracles", "--out-dir", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("checks.json")).unwrap()).unwrap();
    assert_eq!(v["suite"], "oracles");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true && c["anchor"].is_string()));
}

#[test]
fn unknown_suite_rejected() {
    let o = pphi2(&["verify", "everything"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("suite"));
}
