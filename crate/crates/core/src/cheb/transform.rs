use nalgebra::DMatrix;

use super::grid::ChebGrid;
use super::{check_domain, clenshaw};
use crate::error::{Error, Result};

/// Coefficients `f_n` of a finite Chebyshev series `Σ f_n T_n(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs1D {
    values: Vec<f64>,
}

impl Coeffs1D {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "a Chebyshev series needs at least one coefficient");
        Self { values }
    }

    pub fn zeros(degree: usize) -> Self {
        Self::new(vec![0.0; degree + 1])
    }

    /// The unit series `T_m` of the given degree.
    pub fn unit(degree: usize, m: usize) -> Self {
        let mut c = Self::zeros(degree);
        c.values[m] = 1.0;
        c
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Evaluates the series at a single point of `[-1, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(clenshaw(&self.values, x))
    }
}

/// Space-time Chebyshev coefficients `f_{jk}`: row `j` is the spatial mode,
/// column `k` the temporal mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs2D {
    values: DMatrix<f64>,
}

impl Coeffs2D {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(degree_x: usize, degree_t: usize) -> Self {
        Self::new(DMatrix::zeros(degree_x + 1, degree_t + 1))
    }

    pub fn degree_x(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn degree_t(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Evaluates `Σ_j Σ_k f_{jk} T_j(x) T_k(t)` at an arbitrary point.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        check_domain(x)?;
        check_domain(t)?;
        let per_mode: Vec<f64> = (0..self.values.nrows())
            .map(|j| {
                let row: Vec<f64> = self.values.row(j).iter().copied().collect();
                clenshaw(&row, t)
            })
            .collect();
        Ok(clenshaw(&per_mode, x))
    }
}

/// Nodal values `u_{nm}` on a tensor Gauss–Lobatto grid: row `n` is the
/// spatial node `x_n`, column `m` the temporal node `t_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField2D {
    values: DMatrix<f64>,
}

impl NodalField2D {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n_x: usize, n_t: usize) -> Self {
        Self::new(DMatrix::zeros(n_x + 1, n_t + 1))
    }

    pub fn from_fn(grid_x: &ChebGrid, grid_t: &ChebGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let (x, t) = (grid_x.nodes(), grid_t.nodes());
        Self::new(DMatrix::from_fn(x.len(), t.len(), |n, m| f(x[n], t[m])))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Spatial profile at time node `m`.
    pub fn time_slice(&self, m: usize) -> Vec<f64> {
        self.values.column(m).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_dims(&self, grid_x: &ChebGrid, grid_t: &ChebGrid) -> Result<()> {
        let (rows, cols) = self.values.shape();
        if rows != grid_x.len() || cols != grid_t.len() {
            return Err(Error::DimensionMismatch {
                expected_rows: grid_x.len(),
                expected_cols: grid_t.len(),
                rows,
                cols,
            });
        }
        Ok(())
    }
}

/// Chebyshev coefficients of samples taken at the Gauss–Lobatto nodes,
/// `f_n = (1/γ_n) Σ_k f(x_k) T_n(x_k) w_k`, computed with a fast cosine
/// transform.
pub fn forward_1d(samples: &[f64], grid: &ChebGrid) -> Result<Coeffs1D> {
    check_len(samples.len(), grid.len())?;
    let mut out = vec![0.0; grid.len()];
    forward_in_place(samples, grid, &mut out);
    Ok(Coeffs1D::new(out))
}

pub(crate) fn forward_in_place(samples: &[f64], grid: &ChebGrid, out: &mut [f64]) {
    grid.dct1(samples, out);
    let n = grid.n_max() as f64;
    for (k, v) in out.iter_mut().enumerate() {
        *v /= n * grid.end_factor(k);
    }
}

/// Values of a Chebyshev series at the Gauss–Lobatto nodes of `grid`.
pub(crate) fn inverse_at_nodes(coeffs: &[f64], grid: &ChebGrid, out: &mut [f64]) {
    let scaled: Vec<f64> = coeffs.iter().enumerate().map(|(k, c)| c * grid.end_factor(k)).collect();
    grid.dct1(&scaled, out);
    for v in out.iter_mut() {
        *v *= 0.5;
    }
}

/// Evaluates `Σ f_n T_n(x)` at each of `points`.
pub fn inverse_1d(coeffs: &Coeffs1D, points: &[f64]) -> Result<Vec<f64>> {
    points.iter().map(|&x| coeffs.eval(x)).collect()
}

/// Values of a series at the nodes of its own degree's grid (fast path).
pub fn inverse_1d_on_grid(coeffs: &Coeffs1D, grid: &ChebGrid) -> Result<Vec<f64>> {
    check_len(coeffs.values().len(), grid.len())?;
    let mut out = vec![0.0; grid.len()];
    inverse_at_nodes(coeffs.values(), grid, &mut out);
    Ok(out)
}

/// Tensor-product transform of a nodal field: cosine transforms along the
/// time axis of every spatial row, then along space for every temporal mode.
pub fn forward_2d(samples: &NodalField2D, grid_x: &ChebGrid, grid_t: &ChebGrid) -> Result<Coeffs2D> {
    samples.check_dims(grid_x, grid_t)?;
    let values = apply_both_axes(samples.values(), grid_x, grid_t, forward_in_place);
    Ok(Coeffs2D::new(values))
}

/// Evaluates a space-time series on the tensor Gauss–Lobatto grid.
pub fn inverse_2d(coeffs: &Coeffs2D, grid_x: &ChebGrid, grid_t: &ChebGrid) -> Result<NodalField2D> {
    let (rows, cols) = coeffs.values().shape();
    if rows != grid_x.len() || cols != grid_t.len() {
        return Err(Error::DimensionMismatch {
            expected_rows: grid_x.len(),
            expected_cols: grid_t.len(),
            rows,
            cols,
        });
    }
    let values = apply_both_axes(coeffs.values(), grid_x, grid_t, inverse_at_nodes);
    Ok(NodalField2D::new(values))
}

/// Applies a 1D transform to every column (spatial axis) of `input`.
pub(crate) fn along_space(
    input: &DMatrix<f64>,
    grid_x: &ChebGrid,
    op: fn(&[f64], &ChebGrid, &mut [f64]),
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(input.nrows(), input.ncols());
    for (src, mut dst) in input.column_iter().zip(out.column_iter_mut()) {
        op(src.as_slice(), grid_x, dst.as_mut_slice());
    }
    out
}

/// Applies a 1D transform to every row (temporal axis) of `input`.
pub(crate) fn along_time(
    input: &DMatrix<f64>,
    grid_t: &ChebGrid,
    op: fn(&[f64], &ChebGrid, &mut [f64]),
) -> DMatrix<f64> {
    let transposed = input.transpose();
    along_space(&transposed, grid_t, op).transpose()
}

fn apply_both_axes(
    input: &DMatrix<f64>,
    grid_x: &ChebGrid,
    grid_t: &ChebGrid,
    op: fn(&[f64], &ChebGrid, &mut [f64]),
) -> DMatrix<f64> {
    along_time(&along_space(input, grid_x, op), grid_t, op)
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}
