use thiserror::Error;

/// Error type shared by all solver and analysis operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation was handed parameters outside its domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Two objects built on different grids were combined.
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    /// A time step larger than the stability limit was requested.
    /// `max_dt` is the largest admissible step for the current state.
    #[error("time step {dt:.3e} exceeds the stable limit {max_dt:.3e}")]
    StepRejected { dt: f64, max_dt: f64 },

    /// The update produced NaN or negative densities.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Not enough samples to run an analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A bisection bracket whose endpoints do not straddle the transition.
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
