//! End-to-end runs of small experiments, the config files and the CLI.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cgstop::criteria::CriterionKind;
use cgstop::experiment::TRACE_COLUMNS;
use cgstop::experiment::{run_experiment, write_outputs, ExperimentConfig, ProblemKind};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_test1() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(ProblemKind::Test1);
    cfg.set("n", "4").unwrap();
    cfg.set("degree", "2").unwrap();
    cfg.set("criteria", "c1,c2,c3,c4,c5,c7:1e-8").unwrap();
    cfg.validate().unwrap();
    cfg
}

#[test]
fn small_run_writes_every_output() {
    let cfg = small_test1();
    let r = run_experiment(&cfg).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert!(r.reference.e_dis > 0.0);
    for kind in [CriterionKind::C1, CriterionKind::C5, CriterionKind::C7 { tol: 1e-8 }] {
        let v = r.verdict(kind).unwrap();
        assert!(v.k_star.is_some(), "{kind} did not fire");
        assert!(v.quality_ratio.unwrap() >= 1.0);
    }

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&r, dir.path()).unwrap();
    for f in ["trace.csv", "summary.csv", "mesh.txt", "config.echo"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let mut rd = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, TRACE_COLUMNS);
    let rows = rd.records().count();
    assert_eq!(rows, r.trace.iterations + 1);

    // The echoed config reproduces the run settings.
    let echoed = ExperimentConfig::from_toml(&fs::read_to_string(dir.path().join("config.echo")).unwrap()).unwrap();
    assert_eq!(echoed.degree, 2);
    assert_eq!(echoed.criteria, cfg.criteria);
}

#[test]
fn shipped_configs_parse_and_validate() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::from_toml(&fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 6);
}

#[test]
fn bad_config_is_rejected() {
    assert!(ExperimentConfig::from_toml("problem = \"test9\"").is_err());
    assert!(ExperimentConfig::from_toml("tau = \"x\"").is_err());
    let mut cfg = ExperimentConfig::defaults(ProblemKind::Test1);
    assert!(cfg.set("criteria", "c8").is_err());
    assert!(cfg.set("no_such_key", "1").is_err());
}

#[test]
fn cli_verify_and_run() {
    let exe = env!("CARGO_BIN_EXE_cgstop");
    let out = Command::new(exe).arg("verify").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(exe)
        .args(["run", "--problem", "test1", "--degree", "2", "--set", "n=4", "--criteria", "c1,c7:1e-6", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("C1"));
    assert!(dir.path().join("summary.csv").is_file());

    let out = Command::new(exe).args(["run", "--set", "degree"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
