//! Periodic spatial discretization and cell-averaged density fields.
//!
//! The domain is the one-dimensional torus `[-L/2, L/2)` split into uniform
//! cells; densities are stored as cell-center values and carry their grid so
//! that mismatched combinations are caught early.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Truncation tolerance for periodized-Gaussian image sums.
pub const DEFAULT_IMAGE_TOL: f64 = 1e-12;

/// Uniform periodic mesh on `[-L/2, L/2)`.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    length: f64,
    n_cells: usize,
    dx: f64,
    centers: Vec<f64>,
}

impl TorusGrid {
    /// Builds a grid with `n_cells` uniform cells on `[-length/2, length/2)`.
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_cells must be at least 2, got {n_cells}"
            )));
        }
        let dx = length / n_cells as f64;
        let centers = (0..n_cells)
            .map(|i| -0.5 * length + (i as f64 + 0.5) * dx)
            .collect();
        Ok(Self {
            length,
            n_cells,
            dx,
            centers,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Interface coordinate `x_{i+1/2}` between cell `i` and its right
    /// neighbour (circularly).
    pub fn interface(&self, i: usize) -> f64 {
        -0.5 * self.length + (i as f64 + 1.0) * self.dx
    }

    /// Two grids are interchangeable when cell count and length agree bitwise.
    pub fn same_as(&self, other: &TorusGrid) -> bool {
        self.n_cells == other.n_cells && self.length == other.length
    }
}

/// Maps a signed displacement to its minimum-image representative in
/// `[-L/2, L/2)`.
pub fn wrap_displacement(length: f64, d: f64) -> f64 {
    let mut r = d - length * (d / length + 0.5).floor();
    // Guard against boundary rounding for displacements many periods away.
    if r >= 0.5 * length {
        r -= length;
    } else if r < -0.5 * length {
        r += length;
    }
    r
}

/// One Gaussian bump of a mixture initial condition.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// Nonnegative cell-averaged density on a [`TorusGrid`].
#[derive(Debug, Clone)]
pub struct DensityField {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
}

impl DensityField {
    /// Wraps raw cell values, checking length, finiteness and nonnegativity.
    ///
    /// Mass is not forced to one here; the named constructors below normalize.
    pub fn new(grid: Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::IncompatibleGrids(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "density values must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// The homogeneous density `1/L`.
    pub fn uniform(grid: Arc<TorusGrid>) -> Self {
        let v = 1.0 / grid.length();
        let values = vec![v; grid.n_cells()];
        Self { grid, values }
    }

    /// Gaussian density wrapped onto the torus by summing shifted images,
    /// then renormalized so the discrete mass is exactly one.
    ///
    /// The number of images is chosen so the neglected tail mass stays below
    /// `image_tol`.
    pub fn periodized_gaussian(
        grid: Arc<TorusGrid>,
        mean: f64,
        std: f64,
        image_tol: f64,
    ) -> Result<Self> {
        if !(std.is_finite() && std > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gaussian std must be positive, got {std}"
            )));
        }
        if !(image_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "image_tol must be positive, got {image_tol}"
            )));
        }
        let length = grid.length();
        let mean = wrap_displacement(length, mean);
        let k = gaussian_image_count(length, std, image_tol);
        let norm = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
        let values: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for n in -k..=k {
                    let z = x - mean + n as f64 * length;
                    acc += norm * (-z * z / (2.0 * std * std)).exp();
                }
                acc
            })
            .collect();
        let mut field = Self { grid, values };
        field.normalize();
        Ok(field)
    }

    /// Convex combination of periodized Gaussians, renormalized on the grid.
    ///
    /// Weights must be positive and sum to one within 1e-10.
    pub fn mixture(
        grid: Arc<TorusGrid>,
        components: &[GaussianComponent],
        image_tol: f64,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig(
                "mixture requires at least one component".into(),
            ));
        }
        if let Some(c) = components.iter().find(|c| !(c.weight > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "mixture weights must be positive, got {}",
                c.weight
            )));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "mixture weights must sum to 1 within 1e-10, got {total}"
            )));
        }
        let mut values = vec![0.0; grid.n_cells()];
        for c in components {
            let part = Self::periodized_gaussian(grid.clone(), c.mean, c.std, image_tol)?;
            for (acc, v) in values.iter_mut().zip(part.values()) {
                *acc += c.weight * v;
            }
        }
        let mut field = Self { grid, values };
        field.normalize();
        Ok(field)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Discrete mass `sum_i rho_i dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Rescales the values so the discrete mass is exactly one.
    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            let scale = 1.0 / m;
            for v in &mut self.values {
                *v *= scale;
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn same_grid(&self, other: &DensityField) -> bool {
        self.grid.same_as(&other.grid)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<TorusGrid>, values: Vec<f64>) -> Self {
        Self { grid, values }
    }
}

/// Smallest image count whose neglected Gaussian tail mass is below `tol`,
/// from the subgaussian bound `P(|Z| > kL) <= 2 exp(-(kL)^2 / (2 std^2))`.
fn gaussian_image_count(length: f64, std: f64, tol: f64) -> i64 {
    let z = (2.0 * (2.0 / tol).ln()).sqrt();
    ((std / length * z).ceil() as i64).max(1)
}
