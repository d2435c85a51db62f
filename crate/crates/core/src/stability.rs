//! Linear stability threshold of the homogeneous state and numerical
//! bracketing of the coexistence boundary.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DensityField, TorusGrid};
use crate::kernel::{InteractionKernel, KernelTable};
use crate::solver::{evolve, Scheme, SolverConfig};

/// Outcome of flatness classification of a relaxed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FinalState {
    Homogeneous,
    Clustered,
}

impl std::fmt::Display for FinalState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Homogeneous => "Homogeneous",
            Self::Clustered => "Clustered",
        })
    }
}

/// Default contrast below which a state counts as homogeneous: half a
/// percent of the uniform level for the standard domain.
pub const DEFAULT_FLATNESS_TOL: f64 = 1e-3;

/// Noise strength below which the homogeneous state is linearly unstable.
///
/// Mode `k` destabilizes `1/L` when `sigma^2 < -2 u_hat_k / L`; the maximum
/// over `k = 1..=k_max` of the marginal noise strength is returned, or zero
/// when every mode is stabilizing.
pub fn sigma_sharp(table: &KernelTable, k_max: usize) -> Result<f64> {
    let n = table.grid().n_cells();
    if k_max == 0 || k_max >= n / 2 {
        return Err(Error::InvalidConfig(format!(
            "k_max must be in 1..n/2 = {}, got {k_max}",
            n / 2
        )));
    }
    let length = table.grid().length();
    let max_sq = table.fourier()[1..=k_max]
        .iter()
        .map(|&uk| (-2.0 * uk / length).max(0.0))
        .fold(0.0, f64::max);
    Ok(max_sq.sqrt())
}

/// Flatness test: homogeneous iff `max rho - min rho < flatness_tol`.
pub fn classify_final_state(field: &DensityField, flatness_tol: f64) -> FinalState {
    if field.max_value() - field.min_value() < flatness_tol {
        FinalState::Homogeneous
    } else {
        FinalState::Clustered
    }
}

/// One probe evolution of the bisection.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ProbeVerdict {
    pub sigma: f64,
    pub state: FinalState,
    pub final_contrast: f64,
}

/// Bracket around the noise strength where the clustered branch disappears.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PhaseBracket {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub iterations: usize,
    pub verdicts: Vec<ProbeVerdict>,
}

impl PhaseBracket {
    pub fn width(&self) -> f64 {
        self.sigma_hi - self.sigma_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.sigma_lo + self.sigma_hi)
    }

    /// No clustered verdict may sit above a homogeneous one; a violation
    /// indicates probes that were stopped before relaxing (t_max too small).
    pub fn verdicts_monotone(&self) -> bool {
        let mut sorted = self.verdicts.clone();
        sorted.sort_by(|a, b| a.sigma.partial_cmp(&b.sigma).unwrap());
        let last_clustered = sorted
            .iter()
            .filter(|v| v.state == FinalState::Clustered)
            .map(|v| v.sigma)
            .fold(f64::NEG_INFINITY, f64::max);
        let first_homogeneous = sorted
            .iter()
            .filter(|v| v.state == FinalState::Homogeneous)
            .map(|v| v.sigma)
            .fold(f64::INFINITY, f64::min);
        last_clustered < first_homogeneous
    }
}

/// Settings for [`estimate_sigma_c`].
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SigmaCSearch {
    /// Standard deviation of the sharp centered Gaussian probe.
    pub probe_std: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Bisection halts once the bracket is narrower than this.
    pub sigma_tol: f64,
    /// Probe evolutions run to this horizon unless stationary earlier.
    pub t_max: f64,
    pub flatness_tol: f64,
    pub solver: SolverConfig,
}

impl Default for SigmaCSearch {
    fn default() -> Self {
        Self {
            probe_std: 0.2,
            sigma_lo: 0.70,
            sigma_hi: 1.00,
            sigma_tol: 0.02,
            t_max: 30.0,
            flatness_tol: DEFAULT_FLATNESS_TOL,
            solver: SolverConfig {
                scheme: Scheme::FullPotentialUpwind,
                ..SolverConfig::default()
            },
        }
    }
}

/// Brackets the coexistence boundary by bisection on the noise strength.
///
/// A sharp probe Gaussian selects the clustered basin whenever a clustered
/// equilibrium exists, so a clustered outcome moves the lower edge up and a
/// homogeneous outcome moves the upper edge down. Both bracket endpoints are
/// probed first; equal verdicts make the bracket invalid.
pub fn estimate_sigma_c(
    kernel: &InteractionKernel,
    grid: Arc<TorusGrid>,
    search: &SigmaCSearch,
) -> Result<PhaseBracket> {
    if !(search.sigma_lo < search.sigma_hi) {
        return Err(Error::InvalidBracket(format!(
            "need sigma_lo < sigma_hi, got [{}, {}]",
            search.sigma_lo, search.sigma_hi
        )));
    }
    if !(search.sigma_tol > 0.0) {
        return Err(Error::InvalidConfig("sigma_tol must be positive".into()));
    }
    let table = KernelTable::build(kernel, grid.clone(), crate::grid::DEFAULT_IMAGE_TOL)?;
    let probe = DensityField::periodized_gaussian(
        grid,
        0.0,
        search.probe_std,
        crate::grid::DEFAULT_IMAGE_TOL,
    )?;

    let mut verdicts = Vec::new();
    let mut run_probe = |sigma: f64| -> Result<FinalState> {
        // ledger cadence is irrelevant here; record sparsely
        let out = evolve(
            &probe,
            &table,
            sigma,
            &search.solver,
            search.t_max,
            1000,
            &[],
        )?;
        let contrast = out.final_field.max_value() - out.final_field.min_value();
        let state = classify_final_state(&out.final_field, search.flatness_tol);
        verdicts.push(ProbeVerdict {
            sigma,
            state,
            final_contrast: contrast,
        });
        Ok(state)
    };

    let lo_state = run_probe(search.sigma_lo)?;
    let hi_state = run_probe(search.sigma_hi)?;
    if lo_state == hi_state {
        return Err(Error::InvalidBracket(format!(
            "both endpoints relax to {lo_state} states; the bracket does not straddle the transition"
        )));
    }
    if lo_state != FinalState::Clustered {
        return Err(Error::InvalidBracket(
            "expected the lower endpoint to relax to a clustered state".into(),
        ));
    }

    let mut lo = search.sigma_lo;
    let mut hi = search.sigma_hi;
    let mut iterations = 0;
    while hi - lo >= search.sigma_tol {
        let mid = 0.5 * (lo + hi);
        match run_probe(mid)? {
            FinalState::Clustered => lo = mid,
            FinalState::Homogeneous => hi = mid,
        }
        iterations += 1;
    }

    Ok(PhaseBracket {
        sigma_lo: lo,
        sigma_hi: hi,
        iterations,
        verdicts,
    })
}
