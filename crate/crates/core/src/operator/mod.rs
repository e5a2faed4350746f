//! The nonlinear peridynamic operator with cubic bond response,
//!
//! ```text
//! L u = C ∗ u³ − 3u (C ∗ u²) + 3u² (C ∗ u) − m u³,
//! ```
//!
//! which is the expansion of `∫ C(x − y) (u(y) − u(x))³ dy`. Here `m(x)` is
//! the mass `(C ∗ 1)(x)` of the kernel over the part of the bar that
//! interacts with `x`; it equals `β = ∫ C` wherever the horizon ball stays
//! inside the bar, and keeps constant states in equilibrium at the ends.

mod convolution;
mod micromodulus;

pub use convolution::{convolve_direct, convolve_fast, ConvolutionOperator};
pub use micromodulus::{compute_beta, eval_micromodulus, KernelKind, Micromodulus};

use nalgebra::DMatrix;

use crate::cheb::ChebGrid;
use crate::error::{Error, Result};

/// How the three convolutions inside `L` are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvolutionMode {
    /// Cosine transform followed by the precomputed kernel moments.
    Fast,
    /// Adaptive quadrature of the interpolant (oracle).
    Direct,
}

/// `L` on one grid, with the convolution moments and the nodal convolution
/// matrix built once.
#[derive(Clone, Debug)]
pub struct PeridynamicOperator {
    kernel: Micromodulus,
    conv: ConvolutionOperator,
    nodal: DMatrix<f64>,
}

impl PeridynamicOperator {
    pub fn new(kernel: &Micromodulus, grid: &ChebGrid) -> Self {
        let conv = ConvolutionOperator::new(kernel, grid);
        let nodal = conv.nodal_matrix();
        Self {
            kernel: kernel.clone(),
            conv,
            nodal,
        }
    }

    pub fn kernel(&self) -> &Micromodulus {
        &self.kernel
    }

    pub fn grid(&self) -> &ChebGrid {
        self.conv.grid()
    }

    pub fn convolution(&self) -> &ConvolutionOperator {
        &self.conv
    }

    /// `L u` at the nodes for one spatial profile.
    pub fn apply(&self, u: &[f64], mode: ConvolutionMode) -> Result<Vec<f64>> {
        let grid = self.grid();
        if u.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("operator input"));
        }
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let cube: Vec<f64> = u.iter().map(|v| v * v * v).collect();
        let (c1, c2, c3, mass) = match mode {
            ConvolutionMode::Fast => (
                self.conv.apply_nodal(u)?,
                self.conv.apply_nodal(&sq)?,
                self.conv.apply_nodal(&cube)?,
                self.conv.mass().to_vec(),
            ),
            ConvolutionMode::Direct => (
                convolve_direct(&self.kernel, u, grid)?,
                convolve_direct(&self.kernel, &sq, grid)?,
                convolve_direct(&self.kernel, &cube, grid)?,
                convolve_direct(&self.kernel, &vec![1.0; grid.len()], grid)?,
            ),
        };
        Ok((0..u.len())
            .map(|i| combine(u[i], c1[i], c2[i], c3[i], mass[i]))
            .collect())
    }

    /// `L` applied to every column of a nodal field (fast mode).
    pub fn apply_columns(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let sq = u.map(|v| v * v);
        let cube = u.map(|v| v * v * v);
        let c1 = self.conv.apply_columns(u);
        let c2 = self.conv.apply_columns(&sq);
        let c3 = self.conv.apply_columns(&cube);
        let mass = self.conv.mass();
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| {
            combine(u[(i, j)], c1[(i, j)], c2[(i, j)], c3[(i, j)], mass[i])
        })
    }

    /// Jacobian of `u ↦ L u` at one spatial profile, with `K` the nodal
    /// convolution matrix:
    ///
    /// ```text
    /// 3K diag(u²) − 6 diag(u) K diag(u) + 3 diag(u²) K + diag(−3 K u² + 6 u ∘ K u − 3 m u²)
    /// ```
    pub fn linearization(&self, u: &[f64]) -> DMatrix<f64> {
        let k = &self.nodal;
        let size = u.len();
        let mass = self.conv.mass();
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let ku = k * nalgebra::DVector::from_column_slice(u);
        let ksq = k * nalgebra::DVector::from_column_slice(&sq);
        DMatrix::from_fn(size, size, |i, j| {
            let mut v = k[(i, j)] * (3.0 * sq[j] - 6.0 * u[i] * u[j] + 3.0 * sq[i]);
            if i == j {
                v += -3.0 * ksq[i] + 6.0 * u[i] * ku[i] - 3.0 * mass[i] * sq[i];
            }
            v
        })
    }
}

fn combine(u: f64, c1: f64, c2: f64, c3: f64, mass: f64) -> f64 {
    c3 - 3.0 * u * c2 + 3.0 * u * u * c1 - mass * u * u * u
}

/// `L u` for a single spatial profile; builds the operator on the fly.
pub fn apply_l(u_slice: &[f64], kernel: &Micromodulus, grid: &ChebGrid, mode: ConvolutionMode) -> Result<Vec<f64>> {
    PeridynamicOperator::new(kernel, grid).apply(u_slice, mode)
}
