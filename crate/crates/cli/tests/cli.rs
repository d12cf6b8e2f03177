//! Exit codes and error surfaces of the `nvpol` binary: 0 success,
//! 2 validation failure, 3 oracle failure, 1 runtime error.

use std::process::Command;

fn nvpol() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nvpol"))
}

#[test]
fn simulate_writes_artifacts_and_manifest_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "n_cycles = 100\nn_seeds = 3\nbath_spins = 60\n").unwrap();
    let out = dir.path().join("out");
    let status = nvpol()
        .args(["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["trace.csv", "result.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"sweep_rate_mhz_per_us\": 0.3"), "manifest must echo the sweep rate");
    assert!(manifest.contains("\"n_cycles\": 100"));
}

#[test]
fn zero_cycles_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "n_cycles = 0\n").unwrap();
    let output = nvpol()
        .args(["simulate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("n_cycles"), "stderr: {err}");
}

#[test]
fn unknown_key_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("typo.toml");
    std::fs::write(&config, "n_cycles = 10\nsweeprange_mhz = 100.0\n").unwrap();
    let output = nvpol()
        .args(["simulate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("sweeprange_mhz"), "stderr: {err}");
    assert!(err.contains("line 2"), "unknown keys should be located by line: {err}");
}

#[test]
fn single_angle_sweep_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("one.toml");
    std::fs::write(&config, "angles_deg = [0.0]\n").unwrap();
    let output = nvpol()
        .args(["angle-sweep", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "n_cycles = 1\nn_seeds = 1\nbath_spins = 5\n").unwrap();
    // a file where the output directory should go
    let blocked = dir.path().join("blocked");
    std::fs::write(&blocked, "not a directory").unwrap();
    let output = nvpol()
        .args(["simulate", "--config", config.to_str().unwrap(), "--out", blocked.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn validate_passes_on_defaults() {
    let output = nvpol().arg("validate").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn print_defaults_parses_back() {
    let output = nvpol().arg("print-defaults").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    nvpol::config::RunConfig::from_toml(&text).expect("emitted defaults must parse");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "n_cycles = 2\nn_seeds = 1\nbath_spins = 10\nmaster_seed = 1\n").unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "1"), (&out_b, "99")] {
        let status = nvpol()
            .args([
                "simulate",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("trace.csv")).unwrap();
    let b = std::fs::read(out_b.join("trace.csv")).unwrap();
    assert_ne!(a, b, "different seeds must sample different baths");
}
