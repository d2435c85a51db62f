//! Interaction potentials, their periodization on the grid, and circular
//! convolution against density fields.
//!
//! A [`KernelTable`] is built once per (kernel, grid) pair: it holds the
//! periodized potential, its gradient and its Fourier coefficients, plus the
//! FFT plans used by the spectral convolution fast path.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{wrap_displacement, DensityField, TorusGrid};

/// Pairwise interaction potential on the line, periodically extended to the
/// torus when tabulated on a grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InteractionKernel {
    /// Sum of an attractive and a repulsive exponential.
    Morse {
        attraction: f64,
        repulsion: f64,
        attraction_length: f64,
        repulsion_length: f64,
    },
    /// Truncated quadratic well `(x^2 - 1)/2` on `|x| <= radius`.
    HegselmannKrause { radius: f64 },
}

impl InteractionKernel {
    pub fn morse(
        attraction: f64,
        repulsion: f64,
        attraction_length: f64,
        repulsion_length: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("attraction", attraction),
            ("repulsion", repulsion),
            ("attraction_length", attraction_length),
            ("repulsion_length", repulsion_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "morse {name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self::Morse {
            attraction,
            repulsion,
            attraction_length,
            repulsion_length,
        })
    }

    pub fn hegselmann_krause(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "interaction radius must be positive, got {radius}"
            )));
        }
        Ok(Self::HegselmannKrause { radius })
    }

    /// Potential value on the free line (no periodization).
    pub fn evaluate(&self, x: f64) -> f64 {
        match *self {
            Self::Morse {
                attraction,
                repulsion,
                attraction_length,
                repulsion_length,
            } => {
                let r = x.abs();
                -attraction * (-r / attraction_length).exp()
                    + repulsion * (-r / repulsion_length).exp()
            }
            Self::HegselmannKrause { radius } => {
                if x.abs() <= radius {
                    0.5 * (x * x - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative of [`evaluate`](Self::evaluate) with the convention
    /// `U'(0) = 0`; at `|x| = radius` the Hegselmann-Krause branch returns
    /// the interior one-sided value.
    pub fn gradient(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match *self {
            Self::Morse {
                attraction,
                repulsion,
                attraction_length,
                repulsion_length,
            } => {
                let r = x.abs();
                let magnitude = attraction / attraction_length * (-r / attraction_length).exp()
                    - repulsion / repulsion_length * (-r / repulsion_length).exp();
                x.signum() * magnitude
            }
            Self::HegselmannKrause { radius } => {
                if x.abs() <= radius {
                    x
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest `|U|` and `|U'|` any point of the torus can receive from the
    /// image shell at `|n| = shell`; used to truncate the periodization sum.
    fn shell_bound(&self, length: f64, shell: i64) -> f64 {
        let dist = (shell as f64 - 0.5) * length;
        match *self {
            Self::Morse {
                attraction,
                repulsion,
                attraction_length,
                repulsion_length,
            } => {
                let ua = attraction * (-dist / attraction_length).exp();
                let ur = repulsion * (-dist / repulsion_length).exp();
                let ga = attraction / attraction_length * (-dist / attraction_length).exp();
                let gr = repulsion / repulsion_length * (-dist / repulsion_length).exp();
                2.0 * (ua + ur).max(ga + gr)
            }
            Self::HegselmannKrause { radius } => {
                if dist <= radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Periodized potential sampled at grid displacements, with gradient and
/// Fourier coefficients, plus cached FFT plans for convolution.
pub struct KernelTable {
    grid: Arc<TorusGrid>,
    u: Vec<f64>,
    du: Vec<f64>,
    fourier: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable")
            .field("n_cells", &self.grid.n_cells())
            .field("u0", &self.u.first())
            .finish()
    }
}

impl KernelTable {
    /// Tabulates `kernel` on `grid`: image sums are truncated once a whole
    /// shell contributes less than `image_tol`.
    ///
    /// For Hegselmann-Krause the radius must not exceed `L/2`; the minimum
    /// image alone is then exact.
    pub fn build(kernel: &InteractionKernel, grid: Arc<TorusGrid>, image_tol: f64) -> Result<Self> {
        if !(image_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "image_tol must be positive, got {image_tol}"
            )));
        }
        let length = grid.length();
        if let InteractionKernel::HegselmannKrause { radius } = kernel {
            if *radius > 0.5 * length {
                return Err(Error::InvalidConfig(format!(
                    "interaction radius {radius} exceeds half the domain length {}",
                    0.5 * length
                )));
            }
        }
        let mut shells = 0i64;
        while kernel.shell_bound(length, shells + 1) >= image_tol {
            shells += 1;
            if shells > 1_000_000 {
                return Err(Error::InvalidConfig(
                    "kernel periodization does not converge on this domain".into(),
                ));
            }
        }

        let n = grid.n_cells();
        let dx = grid.dx();
        let mut u = Vec::with_capacity(n);
        let mut du = Vec::with_capacity(n);
        for j in 0..n {
            let base = wrap_displacement(length, j as f64 * dx);
            let mut uj = 0.0;
            let mut dj = 0.0;
            for s in -shells..=shells {
                let z = base + s as f64 * length;
                uj += kernel.evaluate(z);
                dj += kernel.gradient(z);
            }
            u.push(uj);
            du.push(dj);
        }
        // Zero-displacement convention: image contributions cancel in pairs.
        du[0] = 0.0;

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);

        let mut buf: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft_forward.process(&mut buf);
        let fourier = buf.iter().map(|c| c.re * dx).collect();

        Ok(Self {
            grid,
            u,
            du,
            fourier,
            fft_forward,
            fft_inverse,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Periodized potential at displacement `j*dx` (circular).
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Periodized gradient at displacement `j*dx`, with `du[0] = 0`.
    pub fn du(&self) -> &[f64] {
        &self.du
    }

    /// Real Fourier coefficients `sum_j u_j exp(-i 2 pi k j / n) dx`.
    pub fn fourier(&self) -> &[f64] {
        &self.fourier
    }

    /// Spectral circular convolution `(U * rho)_i = sum_j u_{i-j} rho_j dx`.
    ///
    /// Multiplies by the stored real coefficients, which keeps the output of
    /// mirror-symmetric inputs mirror-symmetric up to rounding.
    pub fn convolve(&self, field: &DensityField) -> Result<Vec<f64>> {
        self.check_grid(field)?;
        Ok(self.convolve_values(field.values()))
    }

    pub(crate) fn convolve_values(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft_forward.process(&mut buf);
        for (c, &uk) in buf.iter_mut().zip(&self.fourier) {
            *c *= uk;
        }
        self.fft_inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Reference double-loop convolution; the spectral path must agree with
    /// this within 1e-10 in max-norm.
    pub fn convolve_direct(&self, field: &DensityField) -> Result<Vec<f64>> {
        self.check_grid(field)?;
        let rho = field.values();
        let n = rho.len();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &r) in rho.iter().enumerate() {
                let shift = (i + n - j) % n;
                acc += self.u[shift] * r;
            }
            *o = acc * dx;
        }
        Ok(out)
    }

    fn check_grid(&self, field: &DensityField) -> Result<()> {
        if !self.grid.same_as(field.grid()) {
            return Err(Error::IncompatibleGrids(
                "kernel table and density field live on different grids".into(),
            ));
        }
        Ok(())
    }
}
