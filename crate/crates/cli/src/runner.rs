//! Executes parsed configs: PDE scenarios, the critical-noise sweep, and
//! particle runs, writing their artifacts to an output directory.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;

use mvlab_core::{
    classify_final_state, classify_regimes, default_rate_deadband, estimate_sigma_c, evolve,
    evolve_particles, peak_height, second_moment, sigma_sharp, DensityField, InteractionKernel,
    KernelTable, ParticleEnsemble, Scheme, SigmaCSearch, SolverConfig, StopReason, TorusGrid,
    DEFAULT_FLATNESS_TOL, DEFAULT_IMAGE_TOL,
};

use crate::config::SimulationConfig;
use crate::output;

#[derive(Debug, Serialize)]
struct RunSummary {
    name: String,
    sigma: f64,
    scheme: Scheme,
    final_state: String,
    final_peak: f64,
    final_mass: f64,
    final_second_moment: f64,
    t_end: f64,
    stop: StopReason,
    regime_sequence: Vec<String>,
    boundary_times: Vec<f64>,
    sigma_sharp: f64,
    anomalous_samples: usize,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    sigma_lo: f64,
    sigma_hi: f64,
    midpoint: f64,
    iterations: usize,
    probe_evolutions: usize,
    verdicts: Vec<mvlab_core::ProbeVerdict>,
    verdicts_monotone: bool,
    sigma_sharp: f64,
    probe_std: f64,
    sigma_tol: f64,
    t_max: f64,
}

#[derive(Debug, Serialize)]
struct ParticleSummary {
    name: String,
    sigma: f64,
    seed: u64,
    count: usize,
    t_end: f64,
    final_peak: f64,
    final_second_moment: f64,
}

fn build_pieces(
    config: &SimulationConfig,
) -> anyhow::Result<(Arc<TorusGrid>, KernelTable, DensityField, f64)> {
    let grid = Arc::new(TorusGrid::new(config.domain.length, config.domain.n_cells)?);
    let table = KernelTable::build(&config.kernel, grid.clone(), DEFAULT_IMAGE_TOL)?;
    let field = DensityField::mixture(grid.clone(), &config.initial.components, DEFAULT_IMAGE_TOL)?;
    let sigma = config
        .sigma
        .context("sigma: required for simulation runs")?;
    Ok((grid, table, field, sigma))
}

fn solver_config(config: &SimulationConfig) -> SolverConfig {
    SolverConfig {
        dt: config.solver.dt,
        scheme: config.solver.scheme,
        stationarity_tol: config.solver.stationarity_tol,
        ..SolverConfig::default()
    }
}

/// Runs the PDE scenario described by `config` and writes `ledger.csv`,
/// `segmentation.json`, `snapshots.csv` and `summary.json` into `out_dir`.
pub fn run_simulation(name: &str, config: &SimulationConfig, out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let (grid, table, field, sigma) = build_pieces(config)?;

    let evolution = evolve(
        &field,
        &table,
        sigma,
        &solver_config(config),
        config.solver.t_final,
        config.solver.record_stride,
        &config.output.snapshot_times,
    )?;

    let deadband = config
        .classifier
        .rate_deadband
        .unwrap_or_else(|| default_rate_deadband(&evolution.ledger));
    let segmentation =
        classify_regimes(&evolution.ledger, deadband, config.classifier.min_duration)?;

    let final_state = classify_final_state(&evolution.final_field, DEFAULT_FLATNESS_TOL);
    let k_max = (grid.n_cells() / 2 - 1).min(20);
    let summary = RunSummary {
        name: name.to_string(),
        sigma,
        scheme: config.solver.scheme,
        final_state: final_state.to_string(),
        final_peak: peak_height(&evolution.final_field),
        final_mass: evolution.final_field.mass(),
        final_second_moment: second_moment(&evolution.final_field),
        t_end: evolution
            .ledger
            .samples()
            .last()
            .map(|s| s.t)
            .unwrap_or(0.0),
        stop: evolution.stop,
        regime_sequence: segmentation
            .non_quiescent()
            .iter()
            .map(|s| s.label.to_string())
            .collect(),
        boundary_times: segmentation.transition_times(),
        sigma_sharp: sigma_sharp(&table, k_max)?,
        anomalous_samples: segmentation.anomalous_samples,
    };

    output::write_ledger_csv(&out_dir.join("ledger.csv"), &evolution.ledger)?;
    output::write_segmentation_json(&out_dir.join("segmentation.json"), &segmentation)?;
    output::write_snapshots_csv(&out_dir.join("snapshots.csv"), &evolution.snapshots)?;
    output::write_summary_json(&out_dir.join("summary.json"), &summary)?;
    Ok(())
}

/// Bisects the coexistence boundary with the standard search settings and
/// writes `summary.json` into `out_dir`.
pub fn run_sweep(out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)?;
    let kernel = InteractionKernel::morse(4.0, 1.0, 0.125, 0.05)?;
    let grid = Arc::new(TorusGrid::new(5.0, 512)?);
    let search = SigmaCSearch::default();
    let bracket = estimate_sigma_c(&kernel, grid.clone(), &search)?;
    let table = KernelTable::build(&kernel, grid, DEFAULT_IMAGE_TOL)?;
    let summary = SweepSummary {
        sigma_lo: bracket.sigma_lo,
        sigma_hi: bracket.sigma_hi,
        midpoint: bracket.midpoint(),
        iterations: bracket.iterations,
        probe_evolutions: bracket.verdicts.len(),
        verdicts_monotone: bracket.verdicts_monotone(),
        verdicts: bracket.verdicts,
        sigma_sharp: sigma_sharp(&table, 20)?,
        probe_std: search.probe_std,
        sigma_tol: search.sigma_tol,
        t_max: search.t_max,
    };
    output::write_summary_json(&out_dir.join("summary.json"), &summary)?;
    Ok(())
}

/// Runs the interacting-particle system from `config` and writes
/// `particles.csv` and `summary.json` into `out_dir`.
pub fn run_particles(
    name: &str,
    config: &SimulationConfig,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)?;
    let (grid, _table, field, sigma) = build_pieces(config)?;
    let seed = seed_override.or(config.seed).unwrap_or(0);
    let ensemble = ParticleEnsemble::sample_from_density(&field, config.particles.count, seed)?;
    let (samples, final_ensemble) = evolve_particles(
        ensemble,
        &config.kernel,
        sigma,
        config.solver.dt,
        config.solver.t_final,
        grid.clone(),
        config.particles.record_stride,
    )?;
    let hist = final_ensemble.empirical_histogram(grid)?;
    let summary = ParticleSummary {
        name: name.to_string(),
        sigma,
        seed,
        count: config.particles.count,
        t_end: final_ensemble.t(),
        final_peak: peak_height(&hist),
        final_second_moment: second_moment(&hist),
    };
    output::write_particle_series_csv(&out_dir.join("particles.csv"), &samples)?;
    output::write_summary_json(&out_dir.join("summary.json"), &summary)?;
    Ok(())
}
