//! End-to-end tests of the `loggas` binary: flag handling, exit codes, the
//! refuse-to-overwrite rule, manifest integrity, and bytewise determinism.

use std::path::Path;
use std::process::{Command, Output};

use loggas_cli::config::ExperimentConfig;
use loggas_cli::manifest::sha256_hex;

fn loggas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loggas"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOGGAS_SEED")
        .env_remove("LOGGAS_THREADS")
        .env_remove("LOGGAS_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn print_defaults_round_trips_and_omits_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loggas(&["sample", "--print-defaults"], tmp.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml_str(&text).expect("defaults parse back");
    assert!(cfg.seed.is_none(), "defaults must not invent a seed");
    assert!(cfg.kind.is_empty());
    assert!(text.contains("LOGGAS_SEED"), "env overrides documented");
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loggas(&["equilibrium", "--out", "x"], tmp.path());
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("seed"), "{err}");
    assert!(!tmp.path().join("x").exists(), "no partial output");
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&loggas(&["frobnicate"], tmp.path())), 2);
    assert_eq!(code(&loggas(&["sample", "--no-such-flag"], tmp.path())), 2);
}

#[test]
fn malformed_and_unknown_config_keys_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "seed = [3]\n").unwrap();
    let out = loggas(&["sample", "--config", "bad.toml"], tmp.path());
    assert_eq!(code(&out), 2);

    std::fs::write(tmp.path().join("typo.toml"), "seed = 3\nsampelr = 1\n").unwrap();
    let out = loggas(&["sample", "--config", "typo.toml"], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn config_kind_conflicting_with_subcommand_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("k.toml"), "kind = \"dbm\"\nseed = 1\n").unwrap();
    let out = loggas(&["sample", "--config", "k.toml", "--out", "y"], tmp.path());
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dbm") && err.contains("sample"), "{err}");
}

#[test]
fn existing_out_dir_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("run1")).unwrap();
    let out = loggas(&["equilibrium", "--seed", "1", "--out", "run1"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("already exists"));
}

#[test]
fn equilibrium_run_is_correct_and_fully_manifested() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loggas(&["equilibrium", "--seed", "7", "--out", "eq"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("eq");

    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut a = f64::NAN;
    let mut b = f64::NAN;
    for line in summary.lines() {
        if let Some(v) = line.strip_prefix("a,") {
            a = v.parse().unwrap();
        }
        if let Some(v) = line.strip_prefix("b,") {
            b = v.parse().unwrap();
        }
    }
    assert!((a + 2.0).abs() < 1e-10, "a = {a}");
    assert!((b - 2.0).abs() < 1e-10, "b = {b}");

    // Every file in the directory is either the manifest or listed in it
    // with a matching hash and size.
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    let mut listed: Vec<String> =
        outputs.iter().map(|o| o["file"].as_str().unwrap().to_string()).collect();
    listed.sort();
    let mut present: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    present.sort();
    assert_eq!(listed, present);
    for o in outputs {
        let bytes = std::fs::read(dir.join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    assert_eq!(manifest["seed_lineage"]["root"].as_u64(), Some(7));
}

#[test]
fn identical_config_and_seed_reproduce_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("c.toml"),
        "seed = 12\n[gas]\nn = 40\n[sampler]\nn_samples = 100\n",
    )
    .unwrap();
    for dir in ["r1", "r2"] {
        let out = loggas(&["sample", "--config", "c.toml", "--out", dir], tmp.path());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["samples.csv", "spectrum.csv", "spectrum.svg", "summary.csv"] {
        let x = std::fs::read(tmp.path().join("r1").join(file)).unwrap();
        let y = std::fs::read(tmp.path().join("r2").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between identical runs");
    }
}

#[test]
fn seed_env_var_fills_in_and_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_loggas"))
        .args(["equilibrium", "--out", "e1"])
        .current_dir(tmp.path())
        .env("LOGGAS_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("e1/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed_lineage"]["root"].as_u64(), Some(99));

    let out = Command::new(env!("CARGO_BIN_EXE_loggas"))
        .args(["equilibrium", "--seed", "5", "--out", "e2"])
        .current_dir(tmp.path())
        .env("LOGGAS_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("e2/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed_lineage"]["root"].as_u64(), Some(5));
}

#[test]
fn numerical_breakdown_exits_3_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    // A genuine double-well is outside the one-cut class the solver handles.
    std::fs::write(
        tmp.path().join("dw.toml"),
        "seed = 2\n[potential]\nform = \"even-poly\"\ncoeffs = [0.0, -1.5, 0.25]\n",
    )
    .unwrap();
    let out = loggas(&["equilibrium", "--config", "dw.toml", "--out", "dw"], tmp.path());
    assert_eq!(code(&out), 3);
    assert!(!tmp.path().join("dw").exists());
}

#[test]
fn csv_flag_echoes_the_primary_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loggas(&["equilibrium", "--seed", "1", "--out", "e", "--csv"], tmp.path());
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("x,density"), "{stdout}");
}
