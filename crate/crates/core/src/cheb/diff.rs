use nalgebra::DMatrix;

use super::transform::{Coeffs1D, Coeffs2D};
use crate::error::{Error, Result};

/// Differentiation operator acting on Chebyshev coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeMatrix {
    order: usize,
    entries: DMatrix<f64>,
}

impl DerivativeMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn apply(&self, coeffs: &Coeffs1D) -> Result<Coeffs1D> {
        let n = self.entries.nrows();
        if coeffs.values().len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: coeffs.values().len(),
            });
        }
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            for (k, f) in coeffs.values().iter().enumerate() {
                *o += self.entries[(i, k)] * f;
            }
        }
        Ok(Coeffs1D::new(out))
    }
}

/// `D_{nk} = 2k / c_n` for `k > n` with `k + n` odd, zero otherwise
/// (`c_0 = 2`, `c_n = 1`). Order 2 is the matrix square `D·D`.
pub fn derivative_matrix(n_max: usize, order: usize) -> Result<DerivativeMatrix> {
    let size = n_max + 1;
    let first = DMatrix::from_fn(size, size, |n, k| {
        if k > n && (k + n) % 2 == 1 {
            let c = if n == 0 { 2.0 } else { 1.0 };
            2.0 * k as f64 / c
        } else {
            0.0
        }
    });
    let entries = match order {
        1 => first,
        2 => &first * &first,
        other => return Err(Error::UnsupportedOrder(other)),
    };
    Ok(DerivativeMatrix { order, entries })
}

/// Coefficients of the derivative of a Chebyshev series,
/// `f'_n = (2/c_n) Σ_{k>n, k+n odd} k f_k`, evaluated in O(N) with the
/// backward recurrence `f'_{n-1} = f'_{n+1} + 2n f_n`.
pub fn diff_coeffs(coeffs: &Coeffs1D) -> Coeffs1D {
    let mut out = vec![0.0; coeffs.values().len()];
    diff_slice(coeffs.values(), &mut out);
    Coeffs1D::new(out)
}

pub(crate) fn diff_slice(f: &[f64], out: &mut [f64]) {
    let n = f.len() - 1;
    out.iter_mut().for_each(|v| *v = 0.0);
    if n == 0 {
        return;
    }
    out[n - 1] = 2.0 * n as f64 * f[n];
    for k in (1..n).rev() {
        out[k - 1] = out[k + 1] + 2.0 * k as f64 * f[k];
    }
    out[0] *= 0.5;
}

/// Applies `D̂ = D·D` along the temporal index of a space-time series:
/// `û_{jk} = Σ_ℓ D̂_{kℓ} f_{jℓ}`.
pub fn second_time_derivative(coeffs: &Coeffs2D) -> Coeffs2D {
    let values = coeffs.values();
    let (rows, cols) = values.shape();
    let mut out = DMatrix::zeros(rows, cols);
    let mut row = vec![0.0; cols];
    let mut first = vec![0.0; cols];
    let mut second = vec![0.0; cols];
    for j in 0..rows {
        for (k, r) in row.iter_mut().enumerate() {
            *r = values[(j, k)];
        }
        diff_slice(&row, &mut first);
        diff_slice(&first, &mut second);
        for (k, s) in second.iter().enumerate() {
            out[(j, k)] = *s;
        }
    }
    Coeffs2D::new(out)
}

/// Applies `D` along the temporal index of a space-time series.
pub fn first_time_derivative(coeffs: &Coeffs2D) -> Coeffs2D {
    let values = coeffs.values();
    let (rows, cols) = values.shape();
    let mut out = DMatrix::zeros(rows, cols);
    let mut row = vec![0.0; cols];
    let mut first = vec![0.0; cols];
    for j in 0..rows {
        for (k, r) in row.iter_mut().enumerate() {
            *r = values[(j, k)];
        }
        diff_slice(&row, &mut first);
        for (k, s) in first.iter().enumerate() {
            out[(j, k)] = *s;
        }
    }
    Coeffs2D::new(out)
}
