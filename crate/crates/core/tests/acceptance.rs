//! Acceptance suite: one test per quantitative claim the library is expected
//! to reproduce, at pinned tolerances.
//!
//! Scenario trajectories are shared between tests through `OnceLock` caches,
//! so the whole suite costs a handful of PDE evolutions plus the particle
//! consistency sweep. Run with `--nocapture` to see the per-criterion
//! summaries.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use mvlab_core::{
    classify_final_state, classify_regimes, default_rate_deadband, estimate_sigma_c, evolve,
    evolve_particles, second_moment, sigma_sharp, DensityField, EnergyLedger, Evolution,
    FinalState, GaussianComponent, InteractionKernel, KernelTable, ParticleEnsemble, RegimeLabel,
    RegimeSegmentation, Scheme, SolverConfig, TorusGrid, DEFAULT_FLATNESS_TOL, DEFAULT_IMAGE_TOL,
};

const BOUNDARY_SLACK: f64 = 0.30;
const MIN_SEGMENT_DURATION: f64 = 0.1;
const RECORD_STRIDE: usize = 5;

fn grid512() -> Arc<TorusGrid> {
    static GRID: OnceLock<Arc<TorusGrid>> = OnceLock::new();
    GRID.get_or_init(|| Arc::new(TorusGrid::new(5.0, 512).unwrap()))
        .clone()
}

fn reference_morse() -> InteractionKernel {
    InteractionKernel::morse(4.0, 1.0, 0.125, 0.05).unwrap()
}

fn production_config() -> SolverConfig {
    SolverConfig {
        scheme: Scheme::FullPotentialUpwind,
        ..SolverConfig::default()
    }
}

struct ScenarioRun {
    name: &'static str,
    evolution: Evolution,
    segmentation: RegimeSegmentation,
    final_state: FinalState,
    initially_symmetric: bool,
}

fn run_scenario(
    name: &'static str,
    kernel: &InteractionKernel,
    sigma: f64,
    components: &[GaussianComponent],
    t_final: f64,
) -> ScenarioRun {
    let grid = grid512();
    let table = KernelTable::build(kernel, grid.clone(), DEFAULT_IMAGE_TOL).unwrap();
    let field = DensityField::mixture(grid, components, DEFAULT_IMAGE_TOL).unwrap();
    let snapshots = [
        0.0,
        t_final / 100.0,
        t_final / 20.0,
        t_final / 5.0,
        t_final / 2.0,
        t_final,
    ];
    let evolution = evolve(
        &field,
        &table,
        sigma,
        &production_config(),
        t_final,
        RECORD_STRIDE,
        &snapshots,
    )
    .unwrap();
    let deadband = default_rate_deadband(&evolution.ledger);
    let segmentation = classify_regimes(&evolution.ledger, deadband, MIN_SEGMENT_DURATION).unwrap();
    let final_state = classify_final_state(&evolution.final_field, DEFAULT_FLATNESS_TOL);
    ScenarioRun {
        name,
        evolution,
        segmentation,
        final_state,
        initially_symmetric: true,
    }
}

fn gaussian(std: f64) -> Vec<GaussianComponent> {
    vec![GaussianComponent {
        weight: 1.0,
        mean: 0.0,
        std,
    }]
}

fn ex1() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario("ex1", &reference_morse(), 0.838, &gaussian(0.5), 35.0))
}

fn fig1() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario("fig1", &reference_morse(), 1.1, &gaussian(0.5), 30.0))
}

fn fig2() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario("fig2", &reference_morse(), 0.5, &gaussian(0.5), 20.0))
}

fn ex2() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    let bimodal = vec![
        GaussianComponent {
            weight: 0.5,
            mean: 0.5,
            std: 0.2,
        },
        GaussianComponent {
            weight: 0.5,
            mean: -0.5,
            std: 0.2,
        },
    ];
    RUN.get_or_init(move || run_scenario("ex2", &reference_morse(), 0.65, &bimodal, 30.0))
}

fn fig5() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario("fig5", &reference_morse(), 0.838, &gaussian(0.4), 30.0))
}

fn fig6() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario("fig6", &reference_morse(), 0.838, &gaussian(0.6), 30.0))
}

fn hk() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let kernel = InteractionKernel::hegselmann_krause(0.5).unwrap();
        run_scenario("hk", &kernel, 0.485, &gaussian(0.5), 200.0)
    })
}

fn all_scenarios() -> Vec<&'static ScenarioRun> {
    vec![ex1(), fig1(), fig2(), ex2(), fig5(), fig6(), hk()]
}

fn labels(run: &ScenarioRun) -> Vec<RegimeLabel> {
    run.segmentation
        .non_quiescent()
        .iter()
        .map(|s| s.label)
        .collect()
}

fn within_slack(measured: f64, expected: f64) -> bool {
    (measured - expected).abs() <= BOUNDARY_SLACK * expected
}

#[test]
fn criterion_01_linear_stability_threshold() {
    let start = Instant::now();
    let table = KernelTable::build(&reference_morse(), grid512(), DEFAULT_IMAGE_TOL).unwrap();
    let s = sigma_sharp(&table, 20).unwrap();
    let elapsed = start.elapsed();
    assert!(
        (0.58..=0.61).contains(&s),
        "sigma_sharp = {s}, expected within [0.58, 0.61]"
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 1 PASS: sigma_sharp = {s:.4} in [0.58, 0.61] ({elapsed:?})");
}

#[test]
fn criterion_02_coexistence_boundary_bracket() {
    let bracket = estimate_sigma_c(
        &reference_morse(),
        grid512(),
        &mvlab_core::SigmaCSearch::default(),
    )
    .unwrap();
    assert!(
        bracket.width() <= 0.02,
        "bracket width {} > 0.02",
        bracket.width()
    );
    assert!(
        bracket.sigma_hi >= 0.83 && bracket.sigma_lo <= 0.89,
        "bracket [{}, {}] misses [0.83, 0.89]",
        bracket.sigma_lo,
        bracket.sigma_hi
    );
    assert!(
        bracket.verdicts.len() <= 8,
        "{} probe evolutions exceed the budget of 8",
        bracket.verdicts.len()
    );
    assert!(
        bracket.verdicts_monotone(),
        "verdicts not monotone in sigma"
    );
    println!(
        "criterion 2 PASS: sigma_c in [{:.4}, {:.4}] after {} probes",
        bracket.sigma_lo,
        bracket.sigma_hi,
        bracket.verdicts.len()
    );
}

#[test]
fn criterion_02b_bracket_above_transition_is_rejected() {
    // both endpoints relax to the homogeneous state
    let search = mvlab_core::SigmaCSearch {
        sigma_lo: 0.95,
        sigma_hi: 1.1,
        ..mvlab_core::SigmaCSearch::default()
    };
    match estimate_sigma_c(&reference_morse(), grid512(), &search) {
        Err(mvlab_core::Error::InvalidBracket(msg)) => {
            assert!(msg.contains("Homogeneous"), "{msg}");
        }
        other => panic!("expected invalid-bracket error, got {other:?}"),
    }
    println!("criterion 2 PASS: same-verdict bracket rejected");
}

#[test]
fn criterion_03_alternating_relaxation_to_homogeneous() {
    let run = ex1();
    let seq = labels(run);
    assert_eq!(
        seq,
        vec![
            RegimeLabel::Diffusion,
            RegimeLabel::Cooperative,
            RegimeLabel::Aggregation,
            RegimeLabel::Diffusion
        ],
        "regime sequence {:?}",
        run.segmentation.segments
    );
    let boundaries = run.segmentation.transition_times();
    let expected = [0.04, 0.4, 3.2];
    for (b, e) in boundaries.iter().zip(expected) {
        assert!(within_slack(*b, e), "boundary {b:.3} outside +-30% of {e}");
    }
    assert_eq!(run.final_state, FinalState::Homogeneous);
    let peak = run.evolution.final_field.max_value();
    assert!(
        (peak - 0.2).abs() <= 0.002,
        "final peak {peak} not within 0.2 +- 0.002"
    );
    // the peak rises above its initial value before decaying to uniform
    let peaks: Vec<f64> = run
        .evolution
        .ledger
        .samples()
        .iter()
        .map(|s| s.peak)
        .collect();
    let max_peak = peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(max_peak > peaks[0] && max_peak > peak);
    println!(
        "criterion 3 PASS: D->C->A->D at t = {:.3}, {:.3}, {:.3}; peak {:.3} -> {:.3} -> {:.4}",
        boundaries[0], boundaries[1], boundaries[2], peaks[0], max_peak, peak
    );
}

#[test]
fn criterion_04_alternating_relaxation_to_clustered() {
    let run = ex2();
    let seq = labels(run);
    assert_eq!(
        seq,
        vec![
            RegimeLabel::Aggregation,
            RegimeLabel::Diffusion,
            RegimeLabel::Cooperative,
            RegimeLabel::Aggregation
        ],
        "regime sequence {:?}",
        run.segmentation.segments
    );
    let boundaries = run.segmentation.transition_times();
    let expected = [1.0, 4.7, 5.0];
    for (b, e) in boundaries.iter().zip(expected) {
        assert!(within_slack(*b, e), "boundary {b:.3} outside +-30% of {e}");
    }
    assert_eq!(run.final_state, FinalState::Clustered);
    println!(
        "criterion 4 PASS: A->D->C->A at t = {:.3}, {:.3}, {:.3}; final clustered",
        boundaries[0], boundaries[1], boundaries[2]
    );
}

#[test]
fn criterion_05_single_dominance_regimes() {
    let diffusive = fig1();
    for seg in &diffusive.segmentation.segments {
        assert!(
            matches!(seg.label, RegimeLabel::Diffusion | RegimeLabel::Quiescent),
            "sigma=1.1 produced a {:?} segment at [{:.3}, {:.3}]",
            seg.label,
            seg.t_start,
            seg.t_end
        );
    }
    assert_eq!(diffusive.final_state, FinalState::Homogeneous);

    let aggregative = fig2();
    for seg in &aggregative.segmentation.segments {
        if seg.t_end <= 0.1 {
            continue;
        }
        assert!(
            matches!(seg.label, RegimeLabel::Aggregation | RegimeLabel::Quiescent),
            "sigma=0.5 produced a {:?} segment at [{:.3}, {:.3}]",
            seg.label,
            seg.t_start,
            seg.t_end
        );
    }
    assert_eq!(aggregative.final_state, FinalState::Clustered);
    println!("criterion 5 PASS: sigma=1.1 all-diffusion, sigma=0.5 all-aggregation");
}

#[test]
fn criterion_06_initial_state_sensitivity() {
    // sharper start commits to the clustered branch
    let sharp = fig5();
    let seq = labels(sharp);
    match seq.as_slice() {
        [RegimeLabel::Aggregation] => {}
        [RegimeLabel::Cooperative, RegimeLabel::Aggregation] => {
            let first = &sharp.segmentation.non_quiescent()[0];
            assert!(
                first.t_start == sharp.evolution.ledger.samples()[0].t && first.duration() < 0.15,
                "leading cooperative segment too long: {:?}",
                first
            );
        }
        other => panic!("unexpected regime sequence for std=0.4: {other:?}"),
    }
    assert_eq!(sharp.final_state, FinalState::Clustered);

    // wider start diffuses away, yet the peak rises first
    let wide = fig6();
    for seg in &wide.segmentation.segments {
        assert!(
            matches!(seg.label, RegimeLabel::Diffusion | RegimeLabel::Quiescent),
            "std=0.6 produced a {:?} segment",
            seg.label
        );
    }
    assert_eq!(wide.final_state, FinalState::Homogeneous);
    let peaks: Vec<f64> = wide
        .evolution
        .ledger
        .samples()
        .iter()
        .map(|s| s.peak)
        .collect();
    let initial = peaks[0];
    let max = peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = *peaks.last().unwrap();
    assert!(
        max > initial && max > last,
        "peak should have an interior maximum: initial {initial}, max {max}, final {last}"
    );
    println!(
        "criterion 6 PASS: std=0.4 clustered; std=0.6 diffusive with peak {:.3} > initial {:.3}",
        max, initial
    );
}

#[test]
fn criterion_07_hegselmann_krause_regimes() {
    let run = hk();
    let non_q = run.segmentation.non_quiescent();
    let aggregation = non_q
        .iter()
        .find(|s| s.label == RegimeLabel::Aggregation)
        .expect("no aggregation segment");
    assert!(
        within_slack(aggregation.t_start, 0.5),
        "aggregation starts at {:.3}, expected 0.5 +- 30%",
        aggregation.t_start
    );
    assert!(
        within_slack(aggregation.t_end, 1.7),
        "aggregation ends at {:.3}, expected 1.7 +- 30%",
        aggregation.t_end
    );
    let last = non_q.last().unwrap();
    assert_eq!(last.label, RegimeLabel::Diffusion, "{non_q:?}");
    assert!(
        within_slack(last.t_start, 2.7),
        "terminal diffusion starts at {:.3}, expected 2.7 +- 30%",
        last.t_start
    );
    // between aggregation and terminal diffusion only cooperative/quiescent
    for seg in &run.segmentation.segments {
        if seg.t_start >= aggregation.t_end - 1e-9 && seg.t_end <= last.t_start + 1e-9 {
            assert!(
                matches!(seg.label, RegimeLabel::Cooperative | RegimeLabel::Quiescent),
                "unexpected {:?} between regimes",
                seg.label
            );
        }
    }
    assert_eq!(run.final_state, FinalState::Homogeneous);
    println!(
        "criterion 7 PASS: aggregation [{:.3}, {:.3}], diffusion from {:.3}, homogeneous end",
        aggregation.t_start, aggregation.t_end, last.t_start
    );
}

#[test]
fn criterion_08_structural_suite() {
    let grid = grid512();
    for run in all_scenarios() {
        let name = run.name;
        // mass conservation across the whole trajectory (initial mass is 1)
        let drift = (run.evolution.final_field.mass() - 1.0).abs();
        assert!(drift <= 1e-11, "{name}: mass drift {drift:.3e}");
        // positivity
        assert!(
            run.evolution.final_field.values().iter().all(|&v| v >= 0.0),
            "{name}: negative density in final state"
        );
        for (_, snap) in &run.evolution.snapshots {
            assert!(
                snap.values().iter().all(|&v| v >= 0.0),
                "{name}: negative density in snapshot"
            );
        }
        // monotone total free energy
        let rise = run.evolution.ledger.max_energy_increase();
        assert!(rise <= 1e-8, "{name}: free energy rose by {rise:.3e}");
        // spectral vs direct convolution on the recorded snapshots
        let kernel = if name == "hk" {
            InteractionKernel::hegselmann_krause(0.5).unwrap()
        } else {
            reference_morse()
        };
        let table = KernelTable::build(&kernel, grid.clone(), DEFAULT_IMAGE_TOL).unwrap();
        for (t, snap) in &run.evolution.snapshots {
            let fast = table.convolve(snap).unwrap();
            let slow = table.convolve_direct(snap).unwrap();
            let gap = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(
                gap < 1e-10,
                "{name}: convolution mismatch {gap:.3e} at t={t}"
            );
        }
    }
    println!("criterion 8 PASS: conservation, positivity, monotonicity, convolution");
}

#[test]
fn criterion_08_symmetry_preservation() {
    // The scheme is mirror-equivariant, so even data stays even as long as
    // the symmetric trajectory is dynamically stable. Below sigma_sharp (and
    // during cluster collapse) asymmetric perturbations grow exponentially,
    // so the rounding noise of the spectral convolution (~1e-16 per step)
    // is amplified to visible scale no matter how the update is arranged;
    // the clustered endpoints cannot hold a 1e-12 bound in floating point.
    let mut failures = Vec::new();
    for run in all_scenarios() {
        if !run.initially_symmetric {
            continue;
        }
        let v = run.evolution.final_field.values();
        let n = v.len();
        let asym = (0..n / 2)
            .map(|i| (v[i] - v[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        println!(
            "criterion 8 symmetry: {} final asymmetry {asym:.3e}",
            run.name
        );
        if asym > 1e-12 {
            failures.push(format!("{}: {asym:.3e}", run.name));
        }
    }
    assert!(
        failures.is_empty(),
        "symmetry beyond 1e-12 on: {failures:?}"
    );
    println!("criterion 8 PASS: symmetric data stayed symmetric on all trajectories");
}

/// Relative mismatch between the ledger's centered energy rate and the
/// recorded dissipation, restricted to samples with `|dF/dt| > 1e-4`.
fn dissipation_mismatch(ledger: &EnergyLedger) -> Vec<(f64, f64)> {
    let s = ledger.samples();
    let mut out = Vec::new();
    for i in 1..s.len().saturating_sub(1) {
        let rate = (s[i + 1].total - s[i - 1].total) / (s[i + 1].t - s[i - 1].t);
        if rate.abs() > 1e-4 {
            let rel = (-rate - s[i].dissipation).abs() / rate.abs();
            out.push((s[i].t, rel));
        }
    }
    out
}

#[test]
fn criterion_08_dissipation_identity() {
    // The identity dF/dt = -dissipation discretizes faithfully only while
    // the solution stays grid-resolved. The sigma=0.5 run collapses to a
    // cluster a few cells wide, where the arithmetic-mean interface density
    // overestimates the mobility several-fold; that scenario cannot meet the
    // 5% bound at this resolution and is reported as a failure.
    let mut failures = Vec::new();
    for run in all_scenarios() {
        let mismatch = dissipation_mismatch(&run.evolution.ledger);
        let worst = mismatch
            .iter()
            .cloned()
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        println!(
            "criterion 8 dissipation: {} worst rel err {:.4} at t={:.3} over {} samples",
            run.name,
            worst.1,
            worst.0,
            mismatch.len()
        );
        if worst.1 > 0.05 {
            failures.push(format!(
                "{}: relative error {:.3} at t={:.3}",
                run.name, worst.1, worst.0
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "dissipation identity beyond 5% on: {failures:?}"
    );
    println!("criterion 8 PASS: dissipation identity within 5% on all trajectories");
}

#[test]
fn criterion_09_second_moment_monotonicity() {
    let run = ex1();
    let s = run.evolution.ledger.samples();
    let span = s.last().unwrap().t - s[0].t;
    let total = s.last().unwrap().second_moment - s[0].second_moment;
    let deadband = 1e-4 * total.max(0.0) / span;
    let mut worst = f64::INFINITY;
    for i in 1..s.len() - 1 {
        let rate = (s[i + 1].second_moment - s[i - 1].second_moment) / (s[i + 1].t - s[i - 1].t);
        worst = worst.min(rate);
        assert!(
            rate >= -deadband,
            "second moment decreased at rate {rate:.3e} at t={:.3}",
            s[i].t
        );
    }
    println!(
        "criterion 9 PASS: second moment non-decreasing (worst rate {worst:.3e}, deadband {deadband:.3e})"
    );
}

#[test]
fn criterion_10_particle_mean_field_consistency() {
    let grid = grid512();
    let kernel = reference_morse();
    let sigma = 1.1;
    let t_final = 10.0;
    let dt = 1e-3;

    // PDE oracle for the second moment at t = 10
    let table = KernelTable::build(&kernel, grid.clone(), DEFAULT_IMAGE_TOL).unwrap();
    let field =
        DensityField::periodized_gaussian(grid.clone(), 0.0, 0.5, DEFAULT_IMAGE_TOL).unwrap();
    let pde = evolve(
        &field,
        &table,
        sigma,
        &production_config(),
        t_final,
        1000,
        &[],
    )
    .unwrap();
    let pde_m2 = second_moment(&pde.final_field);

    let seeds: Vec<u64> = (0..16).collect();
    let mut gaps = Vec::new();
    for &n in &[100usize, 1_000, 10_000] {
        let finals: Vec<f64> = seeds
            .iter()
            .map(|&seed| {
                let ens = ParticleEnsemble::sample_from_density(&field, n, seed).unwrap();
                let (samples, _) =
                    evolve_particles(ens, &kernel, sigma, dt, t_final, grid.clone(), 100_000)
                        .unwrap();
                samples.last().unwrap().second_moment
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var =
            finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
        let se = (var / finals.len() as f64).sqrt();
        let mean_abs_gap =
            finals.iter().map(|x| (x - pde_m2).abs()).sum::<f64>() / finals.len() as f64;
        println!(
            "criterion 10: N={n} seed-mean m2 {mean:.4} (se {se:.4}), PDE {pde_m2:.4}, mean |gap| {mean_abs_gap:.4}"
        );
        if n == 10_000 {
            assert!(
                (mean - pde_m2).abs() <= 3.0 * se,
                "N=10^4 seed-mean {mean} vs PDE {pde_m2} beyond 3 se = {:.4}",
                3.0 * se
            );
        }
        gaps.push(mean_abs_gap);
    }
    assert!(
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        "mean |gap| not decreasing in N: {gaps:?}"
    );
    println!("criterion 10 PASS: gaps {gaps:?} decrease with N");
}
