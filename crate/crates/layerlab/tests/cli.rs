//! Batch front end: configs, determinism, reports and exit codes.

use layerlab::cli::{self, ExperimentConfig};
use layerlab::Error;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::Command;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(CONFIGS).join(name)).unwrap()
}

fn digest(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let bytes = std::fs::read(e.path()).unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                hex::encode(Sha256::digest(bytes)),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    for entry in std::fs::read_dir(CONFIGS).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::parse(&cfg.snapshot().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
    }
}

#[test]
fn approx_is_deterministic_and_reported() {
    let cfg = config("strip_approx.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let s1 = cli::cmd_approx(&cfg, a.path()).unwrap();
    let s2 = cli::cmd_approx(&cfg, b.path()).unwrap();
    assert_eq!(s1.id, s2.id);
    assert_eq!(digest(&a.path().join(&s1.id)), digest(&b.path().join(&s2.id)));
    assert!(s1.error.is_none() && s1.checks.iter().all(|c| c.pass));
    // The snapshot written to the run directory parses back to the same config.
    let snap = std::fs::read_to_string(a.path().join(&s1.id).join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::parse(&snap).unwrap(), cfg);

    let report = cli::cmd_report(a.path(), std::slice::from_ref(&s1.id)).unwrap();
    assert!(report.all_pass() && report.passed == 2);
    assert!(a.path().join("report.json").exists());
    assert!(matches!(
        cli::cmd_report(a.path(), &["missing".into()]),
        Err(Error::MissingRun(_))
    ));
    let empty = cli::cmd_report(a.path(), &[]).unwrap();
    assert!(empty.runs.is_empty() && empty.passed == 0);
}

#[test]
fn run_id_depends_on_command_and_config() {
    let cfg = config("strip_approx.toml");
    let mut other = cfg.clone();
    other.numerics.eps.push(0.0125);
    let id = cli::run_id("approx", &cfg).unwrap();
    assert_eq!(id.len(), 16);
    assert_ne!(id, cli::run_id("solve", &cfg).unwrap());
    assert_ne!(id, cli::run_id("approx", &other).unwrap());
}

#[test]
fn curvature_sign_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let s = cli::cmd_approx(&config("radial_sign.toml"), dir.path()).unwrap();
    let slope = |name: &str| s.checks.iter().find(|c| c.name == name).unwrap().value.unwrap();
    assert!(slope("residual order k=1") >= 1.8);
    assert!(slope("flipped curvature k=1") <= 1.3);
}

#[test]
fn interval_solve_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let s = cli::cmd_solve(&config("interval_solve.toml"), dir.path()).unwrap();
    assert!(s.error.is_none());
    assert!(s.checks.iter().all(|c| c.pass), "{:?}", s.checks);
    let run = dir.path().join(&s.id);
    for f in [
        "solution_0.csv",
        "convergence.csv",
        "solve.json",
        "log.txt",
        "summary.json",
        "config.toml",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(run.join("solution_2.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,x1,u");
    assert_eq!(csv.lines().count(), 2002);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_layerlab");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(bin)
        .args(["weyl", "--config", &format!("{CONFIGS}/circle_weyl.toml"), "--out"])
        .arg(dir.path())
        .args(["--jobs", "1", "--seedless"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS Weyl exponent field 1"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\n[geometry]\n").unwrap();
    let code = Command::new(bin)
        .args(["approx", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(code.code(), Some(2));

    let missing = Command::new(bin)
        .args(["report", "nope", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn failed_solve_exits_with_numeric_failure() {
    // A one-iteration Newton budget cannot reach 1e-11 from the ansatz.
    let bin = env!("CARGO_BIN_EXE_layerlab");
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(format!("{CONFIGS}/interval_solve.toml"))
        .unwrap()
        .replace("[solve]", "newton = { max_iter = 1 }\n\n[solve]");
    let path = dir.path().join("short.toml");
    std::fs::write(&path, text).unwrap();
    let out = Command::new(bin)
        .args(["solve", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL newton"));
}
