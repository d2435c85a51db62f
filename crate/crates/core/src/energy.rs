//! Free-energy decomposition, chemical potential, flux and dissipation
//! diagnostics.
//!
//! The diagnostics here use arithmetic interface means; the solver's own
//! evolution flux upwinds instead, so the two stay deliberately distinct.

use crate::error::Result;
use crate::grid::DensityField;
use crate::kernel::KernelTable;
use crate::observables::{peak_height, second_moment};

/// Default floor inside logarithms; guards user-supplied exact zeros.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-14;

/// Snapshot of the energy decomposition and clustering observables at one
/// instant of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub total: f64,
    pub entropic: f64,
    pub interaction: f64,
    pub dissipation: f64,
    pub peak: f64,
    pub second_moment: f64,
}

impl EnergySample {
    /// Evaluates every ledger quantity for `field` at time `t`.
    pub fn measure(
        t: f64,
        field: &DensityField,
        table: &KernelTable,
        sigma: f64,
        floor: f64,
    ) -> Result<Self> {
        let conv = table.convolve(field)?;
        Ok(Self::from_convolution(t, field, &conv, sigma, floor))
    }

    pub(crate) fn from_convolution(
        t: f64,
        field: &DensityField,
        conv: &[f64],
        sigma: f64,
        floor: f64,
    ) -> Self {
        let dx = field.grid().dx();
        let entropic = entropy_energy(field, sigma);
        let interaction = 0.5
            * field
                .values()
                .iter()
                .zip(conv)
                .map(|(r, c)| r * c)
                .sum::<f64>()
            * dx;
        let mu = chemical_potential_from_convolution(field, conv, sigma, floor);
        let dissipation = dissipation(field, &mu);
        Self {
            t,
            total: entropic + interaction,
            entropic,
            interaction,
            dissipation,
            peak: peak_height(field),
            second_moment: second_moment(field),
        }
    }
}

/// Entropic part `(sigma^2/2) sum_i rho_i log(rho_i) dx`, with `0 log 0 = 0`.
pub fn entropy_energy(field: &DensityField, sigma: f64) -> f64 {
    let dx = field.grid().dx();
    let sum: f64 = field
        .values()
        .iter()
        .map(|&r| if r > 0.0 { r * r.ln() } else { 0.0 })
        .sum();
    0.5 * sigma * sigma * sum * dx
}

/// Interaction part `(1/2) sum_i rho_i (U * rho)_i dx`.
pub fn interaction_energy(field: &DensityField, table: &KernelTable) -> Result<f64> {
    let conv = table.convolve(field)?;
    let dx = field.grid().dx();
    Ok(0.5
        * field
            .values()
            .iter()
            .zip(&conv)
            .map(|(r, c)| r * c)
            .sum::<f64>()
        * dx)
}

/// First variation of the free energy,
/// `mu_i = (sigma^2/2)(1 + log(max(rho_i, floor))) + (U * rho)_i`.
pub fn chemical_potential(
    field: &DensityField,
    table: &KernelTable,
    sigma: f64,
    floor: f64,
) -> Result<Vec<f64>> {
    let conv = table.convolve(field)?;
    Ok(chemical_potential_from_convolution(
        field, &conv, sigma, floor,
    ))
}

pub(crate) fn chemical_potential_from_convolution(
    field: &DensityField,
    conv: &[f64],
    sigma: f64,
    floor: f64,
) -> Vec<f64> {
    chemical_potential_values(field.values(), conv, sigma, floor)
}

pub(crate) fn chemical_potential_values(
    values: &[f64],
    conv: &[f64],
    sigma: f64,
    floor: f64,
) -> Vec<f64> {
    let half_sigma2 = 0.5 * sigma * sigma;
    values
        .iter()
        .zip(conv)
        .map(|(&r, &c)| half_sigma2 * (1.0 + r.max(floor).ln()) + c)
        .collect()
}

/// Diagnostic mass flux at interfaces,
/// `J_{i+1/2} = -(rho_i + rho_{i+1})/2 * (mu_{i+1} - mu_i)/dx` (circular).
pub fn flux(field: &DensityField, mu: &[f64]) -> Vec<f64> {
    let rho = field.values();
    let n = rho.len();
    debug_assert_eq!(mu.len(), n);
    let dx = field.grid().dx();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let mean = 0.5 * (rho[i] + rho[j]);
            -mean * (mu[j] - mu[i]) / dx
        })
        .collect()
}

/// Discrete dissipation functional
/// `sum_i (rho_i + rho_{i+1})/2 * ((mu_{i+1} - mu_i)/dx)^2 dx >= 0`.
pub fn dissipation(field: &DensityField, mu: &[f64]) -> f64 {
    let rho = field.values();
    let n = rho.len();
    debug_assert_eq!(mu.len(), n);
    let dx = field.grid().dx();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let mean = 0.5 * (rho[i] + rho[j]);
            let grad = (mu[j] - mu[i]) / dx;
            mean * grad * grad * dx
        })
        .sum()
}
