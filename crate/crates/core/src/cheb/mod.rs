//! Chebyshev machinery on Gauss–Lobatto grids: nodes, fast transforms in one
//! and two variables, and differentiation in coefficient space.

mod diff;
mod grid;
mod transform;

pub use diff::{derivative_matrix, diff_coeffs, first_time_derivative, second_time_derivative, DerivativeMatrix};
pub use grid::{gauss_lobatto_grid, ChebGrid};
pub use transform::{
    forward_1d, forward_2d, inverse_1d, inverse_1d_on_grid, inverse_2d, Coeffs1D, Coeffs2D, NodalField2D,
};

pub(crate) use diff::diff_slice;
pub(crate) use transform::{along_space, along_time, forward_in_place, inverse_at_nodes};

use crate::error::{Error, Result};

/// `T_n(x) = cos(n arccos x)` with the endpoint values `T_n(±1) = (±1)^n`
/// returned exactly.
pub fn eval_cheb(n: usize, x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(if x == 1.0 {
        1.0
    } else if x == -1.0 {
        if n.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    } else {
        (n as f64 * x.acos()).cos()
    })
}

pub(crate) fn check_domain(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(())
}

/// Clenshaw summation of `Σ c_n T_n(x)`.
pub(crate) fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}
