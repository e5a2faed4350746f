//! Convolution with the micromodulus on a Chebyshev grid.
//!
//! The displacement is the Chebyshev interpolant `u = Σ u_k T_k` on `[-1, 1]`,
//! extended by zero outside the bar. Its convolution with the kernel at the
//! node `x_n` is then linear in the coefficients,
//!
//! ```text
//! (C ∗ u)(x_n) = Σ_k Q_{nk} u_k,   Q_{nk} = ∫ C(x_n - y) T_k(y) dy,
//! ```
//!
//! so the fast path is one cosine transform of the samples followed by the
//! precomputed moment matrix `Q`. The moments are integrated in the angle
//! variable `y = cos θ`, where `T_k(y) = cos kθ` is uniformly oscillatory.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::micromodulus::Micromodulus;
use crate::cheb::{along_space, clenshaw, forward_1d, forward_in_place, ChebGrid, Coeffs1D};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Precomputed kernel moments for one grid.
#[derive(Clone, Debug)]
pub struct ConvolutionOperator {
    grid: ChebGrid,
    moments: DMatrix<f64>,
    mass: Vec<f64>,
}

impl ConvolutionOperator {
    pub fn new(kernel: &Micromodulus, grid: &ChebGrid) -> Self {
        let n = grid.n_max();
        let rule = GaussLegendre::new(16);
        let rows: Vec<Vec<f64>> = grid
            .nodes()
            .par_iter()
            .map(|&x| moment_row(kernel, x, n, &rule))
            .collect();
        let moments = DMatrix::from_fn(n + 1, n + 1, |i, k| rows[i][k]);
        let mass = moments.column(0).iter().copied().collect();
        Self {
            grid: grid.clone(),
            moments,
            mass,
        }
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    /// The moment matrix `Q_{nk} = ∫ C(x_n - y) T_k(y) dy`.
    pub fn moments(&self) -> &DMatrix<f64> {
        &self.moments
    }

    /// `(C ∗ 1)(x_n)`: the kernel mass seen from each node. Equals `β` at
    /// nodes whose horizon ball lies inside the bar.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Convolution evaluated at the nodes, from the coefficients of `u`.
    pub fn apply_coeffs(&self, u_coeffs: &Coeffs1D) -> Result<Vec<f64>> {
        if u_coeffs.degree() != self.grid.n_max() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                actual: u_coeffs.values().len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(u_coeffs.values());
        Ok((&self.moments * v).iter().copied().collect())
    }

    /// Convolution evaluated at the nodes, from nodal samples of `u`.
    pub fn apply_nodal(&self, u: &[f64]) -> Result<Vec<f64>> {
        let coeffs = forward_1d(u, &self.grid)?;
        self.apply_coeffs(&coeffs)
    }

    /// Convolves every column of a nodal field (one column per time level).
    pub fn apply_columns(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let coeffs = along_space(u, &self.grid, forward_in_place);
        &self.moments * coeffs
    }

    /// The nodal-to-nodal matrix `K = Q · F`, with `F` the forward transform.
    pub fn nodal_matrix(&self) -> DMatrix<f64> {
        let size = self.grid.len();
        let identity = DMatrix::<f64>::identity(size, size);
        let transform = along_space(&identity, &self.grid, forward_in_place);
        &self.moments * transform
    }
}

/// One row of moments: `∫ C(x - y) T_k(y) dy` for `k = 0..=n` over the part of
/// the bar that interacts with `x`.
fn moment_row(kernel: &Micromodulus, x: f64, n: usize, rule: &GaussLegendre) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    let mut cuts = interaction_cuts(kernel, x);
    if cuts.len() < 2 {
        return row;
    }
    // Work in θ = acos(y); θ grows as y decreases.
    for y in cuts.iter_mut() {
        *y = y.clamp(-1.0, 1.0).acos();
    }
    cuts.reverse();
    let mut tk = vec![0.0; n + 1];
    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if tb <= ta {
            continue;
        }
        let panels = (((tb - ta) * (n as f64 + 1.0)) / std::f64::consts::PI).ceil().max(4.0) as usize;
        let h = (tb - ta) / panels as f64;
        for p in 0..panels {
            let mid = ta + (p as f64 + 0.5) * h;
            for (z, wq) in rule.nodes().iter().zip(rule.weights()) {
                let theta = mid + 0.5 * h * z;
                let y = theta.cos();
                let weight = 0.5 * h * wq * theta.sin() * kernel.eval(x - y);
                if weight == 0.0 {
                    continue;
                }
                tk[0] = 1.0;
                if n >= 1 {
                    tk[1] = y;
                }
                for k in 2..=n {
                    tk[k] = 2.0 * y * tk[k - 1] - tk[k - 2];
                }
                for (r, t) in row.iter_mut().zip(&tk) {
                    *r += weight * t;
                }
            }
        }
    }
    row
}

/// Breakpoints in `y` of the interaction interval of `x`, ascending:
/// the interval ends, `y = x` (where `|ξ|` itself has a kink) and the kernel
/// kinks mapped to `y = x ∓ ξ`.
fn interaction_cuts(kernel: &Micromodulus, x: f64) -> Vec<f64> {
    let r = kernel.interaction_radius();
    let lo = (x - r).max(-1.0);
    let hi = (x + r).min(1.0);
    if hi <= lo {
        return Vec::new();
    }
    let mut cuts = vec![lo, hi];
    if x > lo && x < hi {
        cuts.push(x);
    }
    for b in kernel.breakpoints() {
        for y in [x - b, x + b] {
            if y > lo && y < hi {
                cuts.push(y);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// `(C ∗ u)` at the Gauss–Lobatto nodes through the precomputed moments.
pub fn convolve_fast(op: &ConvolutionOperator, u_coeffs: &Coeffs1D) -> Result<Vec<f64>> {
    op.apply_coeffs(u_coeffs)
}

/// Quadrature oracle for the convolution: `∫ C(x_n - y) u(y) dy` with `u`
/// the Chebyshev interpolant of the samples (zero outside the bar), composite
/// 8-point Gauss–Legendre with eight panels per horizon, refined until two
/// levels agree to 1e-9.
pub fn convolve_direct(kernel: &Micromodulus, u_samples: &[f64], grid: &ChebGrid) -> Result<Vec<f64>> {
    let coeffs = forward_1d(u_samples, grid)?;
    let rule = GaussLegendre::new(8);
    let delta = kernel.horizon();
    Ok(grid
        .nodes()
        .par_iter()
        .map(|&x| {
            let cuts = interaction_cuts(kernel, x);
            cuts.windows(2)
                .map(|w| {
                    let panels = (8.0 * (w[1] - w[0]) / delta).ceil().max(1.0) as usize;
                    rule.refine(w[0], w[1], panels, 1e-9, 8, |y| {
                        kernel.eval(x - y) * clenshaw(coeffs.values(), y)
                    })
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::gauss_lobatto_grid;

    fn samples(grid: &ChebGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.nodes().iter().map(|&x| f(x)).collect()
    }

    fn interior(grid: &ChebGrid, delta: f64) -> Vec<usize> {
        (0..grid.len())
            .filter(|&i| 1.0 - grid.nodes()[i].abs() >= delta)
            .collect()
    }

    #[test]
    fn zero_field_convolves_to_zero() {
        let g = gauss_lobatto_grid(16).unwrap();
        let c = Micromodulus::gaussian(0.1, true).unwrap();
        let op = ConvolutionOperator::new(&c, &g);
        assert!(op.apply_nodal(&[0.0; 17]).unwrap().iter().all(|&v| v == 0.0));
        assert!(convolve_direct(&c, &[0.0; 17], &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_field_gives_beta_inside() {
        let g = gauss_lobatto_grid(32).unwrap();
        let c = Micromodulus::gaussian(0.1, true).unwrap();
        let op = ConvolutionOperator::new(&c, &g);
        let fast = op.apply_nodal(&[1.0; 33]).unwrap();
        let direct = convolve_direct(&c, &[1.0; 33], &g).unwrap();
        for i in interior(&g, 0.1) {
            assert!((fast[i] - c.beta()).abs() < 1e-14, "{i}: {}", fast[i]);
            assert!((direct[i] - c.beta()).abs() < 1e-14);
        }
        // half a ball at the ends
        assert!((fast[0] - c.beta() / 2.0).abs() < 1e-14);
        assert!((op.mass()[32] - c.beta() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_kernel() {
        let g = gauss_lobatto_grid(8).unwrap();
        let c = Micromodulus::tabulated(vec![0.0, 0.0], 0.1, 0.1, true).unwrap();
        let u = samples(&g, |x| x.sin());
        assert!(convolve_direct(&c, &u, &g).unwrap().iter().all(|&v| v == 0.0));
        let op = ConvolutionOperator::new(&c, &g);
        assert!(op.apply_nodal(&u).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_field_keeps_first_moment() {
        // the odd part C(ξ)ξ integrates to zero, so C ∗ x = β x inside
        let g = gauss_lobatto_grid(24).unwrap();
        let c = Micromodulus::gaussian(0.1, true).unwrap();
        let u = samples(&g, |x| x);
        let direct = convolve_direct(&c, &u, &g).unwrap();
        let fast = ConvolutionOperator::new(&c, &g).apply_nodal(&u).unwrap();
        for i in interior(&g, 0.1) {
            let x = g.nodes()[i];
            assert!((direct[i] - c.beta() * x).abs() < 1e-14);
            assert!((fast[i] - c.beta() * x).abs() < 1e-14);
        }
    }

    #[test]
    fn fast_matches_direct_for_gaussian_data() {
        let g = gauss_lobatto_grid(128).unwrap();
        let u = samples(&g, |x| (-x * x).exp());
        for truncate in [true, false] {
            let c = Micromodulus::gaussian(0.1, truncate).unwrap();
            let op = ConvolutionOperator::new(&c, &g);
            let coeffs = forward_1d(&u, &g).unwrap();
            let fast = convolve_fast(&op, &coeffs).unwrap();
            let direct = convolve_direct(&c, &u, &g).unwrap();
            for i in interior(&g, 0.1) {
                let rel = (fast[i] - direct[i]).abs() / direct[i].abs();
                assert!(rel < 1e-12, "truncate={truncate} node {i}: {rel:e}");
            }
        }
    }

    #[test]
    fn nodal_matrix_matches_transform_path() {
        let g = gauss_lobatto_grid(12).unwrap();
        let c = Micromodulus::gaussian(0.3, false).unwrap();
        let op = ConvolutionOperator::new(&c, &g);
        let u = samples(&g, |x| (3.0 * x).cos() + x);
        let k = op.nodal_matrix();
        let via_matrix = &k * nalgebra::DVector::from_column_slice(&u);
        let via_dct = op.apply_nodal(&u).unwrap();
        for (a, b) in via_matrix.iter().zip(&via_dct) {
            assert!((a - b).abs() < 1e-14);
        }
        let cols = op.apply_columns(&DMatrix::from_column_slice(13, 1, &u));
        for (a, b) in cols.iter().zip(&via_dct) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let g = gauss_lobatto_grid(8).unwrap();
        let c = Micromodulus::gaussian(0.1, true).unwrap();
        let op = ConvolutionOperator::new(&c, &g);
        assert!(matches!(
            convolve_fast(&op, &Coeffs1D::zeros(6)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tabulated_kernel_is_split_at_kinks() {
        let g = gauss_lobatto_grid(20).unwrap();
        let c = Micromodulus::tabulated(vec![1.0, 0.25, 0.5, 0.0], 0.15, 0.15, true).unwrap();
        let op = ConvolutionOperator::new(&c, &g);
        let u = samples(&g, |x| 1.0 + 0.5 * x * x);
        let fast = op.apply_nodal(&u).unwrap();
        let direct = convolve_direct(&c, &u, &g).unwrap();
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{a} {b} {}", a - b);
        }
    }
}
