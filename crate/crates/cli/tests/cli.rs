//! End-to-end checks of the command line front end: artifact layout,
//! determinism, error reporting, and the preset pipeline.

use std::fs;
use std::path::Path;
use std::process::Command;

use mvlab_cli::{config, output, presets, runner};

fn mini_config(dir: &Path) -> String {
    format!(
        r#"{{
        "domain": {{"length": 5.0, "n_cells": 128}},
        "kernel": {{"type": "morse", "attraction": 4.0, "repulsion": 1.0,
                   "attraction_length": 0.125, "repulsion_length": 0.05}},
        "sigma": 0.9,
        "solver": {{"t_final": 0.5, "scheme": "full_potential_upwind", "record_stride": 5}},
        "initial": {{"components": [{{"weight": 1.0, "mean": 0.0, "std": 0.5}}]}},
        "output": {{"directory": "{}", "snapshot_times": [0.0, 0.25, 0.5]}}
    }}"#,
        dir.display()
    )
}

#[test]
fn simulation_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config::parse_config(&mini_config(dir.path())).unwrap();
    runner::run_simulation("mini", &cfg, dir.path()).unwrap();
    for file in [
        "ledger.csv",
        "segmentation.json",
        "snapshots.csv",
        "summary.json",
    ] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let ledger = output::read_ledger_csv(&dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.len() > 50);
    assert_eq!(ledger.samples()[0].t, 0.0);
    let seg = output::read_segmentation_json(&dir.path().join("segmentation.json")).unwrap();
    assert!(!seg.segments.is_empty());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert!(summary["final_mass"].as_f64().unwrap() - 1.0 < 1e-10);
    assert!(summary["sigma_sharp"].as_f64().is_some());

    // snapshots cover the requested times
    let snaps = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().count(), 1 + 3 * 128);
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = config::parse_config(&mini_config(dir_a.path())).unwrap();
    runner::run_simulation("mini", &cfg, dir_a.path()).unwrap();
    runner::run_simulation("mini", &cfg, dir_b.path()).unwrap();
    for file in ["ledger.csv", "segmentation.json", "snapshots.csv"] {
        let a = fs::read(dir_a.path().join(file)).unwrap();
        let b = fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between reruns");
    }
}

#[test]
fn particle_runs_are_seed_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    let mut cfg = config::parse_config(&mini_config(dir_a.path())).unwrap();
    cfg.particles.count = 500;
    cfg.particles.record_stride = 100;
    runner::run_particles("mini", &cfg, Some(7), dir_a.path()).unwrap();
    runner::run_particles("mini", &cfg, Some(7), dir_b.path()).unwrap();
    runner::run_particles("mini", &cfg, Some(8), dir_c.path()).unwrap();
    let a = fs::read(dir_a.path().join("particles.csv")).unwrap();
    let b = fs::read(dir_b.path().join("particles.csv")).unwrap();
    let c = fs::read(dir_c.path().join("particles.csv")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn ex1_preset_reports_expected_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = presets::preset("ex1").unwrap();
    runner::run_simulation("ex1", &cfg, dir.path()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["final_state"], "Homogeneous");
    let sequence: Vec<String> = summary["regime_sequence"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        sequence,
        ["Diffusion", "Cooperative", "Aggregation", "Diffusion"]
    );
    // an aggregation segment overlapping [0.4, 3.2]
    let seg = output::read_segmentation_json(&dir.path().join("segmentation.json")).unwrap();
    assert!(seg
        .segments
        .iter()
        .any(|s| s.label == mvlab_core::RegimeLabel::Aggregation
            && s.t_start < 3.2
            && s.t_end > 0.4));
}

#[test]
fn binary_reports_machine_readable_errors() {
    let exe = env!("CARGO_BIN_EXE_mvlab");
    let dir = tempfile::tempdir().unwrap();

    // unknown preset
    let out = Command::new(exe)
        .args(["scenario", "not-a-preset", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let record: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(record["error"].as_str().unwrap().contains("unknown preset"));

    // invalid config: missing sigma
    let cfg_path = dir.path().join("bad.json");
    fs::write(
        &cfg_path,
        r#"{"kernel": {"type": "hegselmann_krause", "radius": 0.5},
            "solver": {"t_final": 1.0},
            "initial": {"components": [{"weight": 1.0, "mean": 0.0, "std": 0.5}]}}"#,
    )
    .unwrap();
    let out = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let record: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(record["error"]
        .as_str()
        .unwrap()
        .contains("sigma: required"));
}

#[test]
fn binary_runs_config_end_to_end() {
    let exe = env!("CARGO_BIN_EXE_mvlab");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("mini.json");
    fs::write(&cfg_path, mini_config(dir.path())).unwrap();
    let out = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("summary.json").exists());
}
