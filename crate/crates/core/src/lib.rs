//! Numerical laboratory for one-dimensional aggregation-diffusion dynamics
//! on the torus.
//!
//! The crate solves the mean-field PDE
//! `d rho/dt = (sigma^2/2) rho_xx + (rho (U' * rho))_x` with a conservative,
//! positivity-preserving finite-volume scheme, tracks the decomposition of
//! the free energy into entropic and interaction parts, classifies
//! aggregation-, diffusion- and cooperative-dominated intervals from the
//! signs of their rates, brackets stability thresholds of the homogeneous
//! state, and cross-validates against the underlying interacting-particle
//! system.

// Validations negate comparisons on purpose: `!(x > 0.0)` rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod observables;
pub mod particles;
pub mod solver;
pub mod stability;

pub use energy::{
    chemical_potential, dissipation, entropy_energy, flux, interaction_energy, EnergySample,
    DEFAULT_DENSITY_FLOOR,
};
pub use error::{Error, Result};
pub use grid::{wrap_displacement, DensityField, GaussianComponent, TorusGrid, DEFAULT_IMAGE_TOL};
pub use kernel::{InteractionKernel, KernelTable};
pub use observables::{
    classify_regimes, default_rate_deadband, peak_height, second_moment, EnergyLedger, RegimeLabel,
    RegimeSegmentation, Segment,
};
pub use particles::{
    evolve_particles, interaction_drift, interaction_drift_direct, ParticleEnsemble, ParticleSample,
};
pub use solver::{
    cfl_max_dt, evolve, stationarity_check, step, Evolution, Scheme, SolverConfig, StopReason,
};
pub use stability::{
    classify_final_state, estimate_sigma_c, sigma_sharp, FinalState, PhaseBracket, ProbeVerdict,
    SigmaCSearch, DEFAULT_FLATNESS_TOL,
};
