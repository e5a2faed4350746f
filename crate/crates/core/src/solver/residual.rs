use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::lm::LeastSquaresProblem;
use super::problem::ProblemSpec;
use super::sparse::{norm2, norm_inf, JacobianOperator, SparseColumns};
use crate::cheb::{
    along_time, derivative_matrix, diff_slice, forward_in_place, inverse_at_nodes, ChebGrid, NodalField2D,
};
use crate::error::{Error, Result};
use crate::operator::PeridynamicOperator;

/// The residual of the collocation system, split by equation family.
///
/// `pde_rows` holds the node `(x_n, t_m)` for `m = 1..=N` at index
/// `n·N + (m − 1)`; the final-time column `m = 0` carries no equation.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualVector {
    pub pde_rows: Vec<f64>,
    pub ic_rows: Vec<f64>,
    pub velocity_rows: Vec<f64>,
}

impl ResidualVector {
    pub fn len(&self) -> usize {
        self.pde_rows.len() + self.ic_rows.len() + self.velocity_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// PDE residual at spatial node `n`, temporal node `m ≥ 1`.
    pub fn pde(&self, n: usize, m: usize) -> f64 {
        let per = self.ic_rows.len() - 1;
        self.pde_rows[n * per + (m - 1)]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.pde_rows);
        v.extend_from_slice(&self.ic_rows);
        v.extend_from_slice(&self.velocity_rows);
        v
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.to_vec())
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.to_vec())
    }

    pub fn is_finite(&self) -> bool {
        self.pde_rows
            .iter()
            .chain(&self.ic_rows)
            .chain(&self.velocity_rows)
            .all(|v| v.is_finite())
    }
}

/// Everything needed to evaluate the residual of one problem repeatedly:
/// the grid, the operator with its convolution moments, sampled initial
/// data and the nodal time-differentiation matrices.
#[derive(Clone, Debug)]
pub struct SpaceTimeSystem {
    problem: ProblemSpec,
    grid: ChebGrid,
    operator: PeridynamicOperator,
    u0: Vec<f64>,
    v0: Vec<f64>,
    time_factor: f64,
    // Nodal second derivative in time (already scaled by the time factor²).
    d2: DMatrix<f64>,
    // Weights giving the time derivative at t = −1 (scaled by the time factor).
    velocity_weights: Vec<f64>,
}

impl SpaceTimeSystem {
    pub fn new(problem: &ProblemSpec) -> Result<Self> {
        problem.validate()?;
        let n = problem.n_max;
        let grid = ChebGrid::new(n)?;
        let kernel = problem.normalized_kernel()?;
        let operator = PeridynamicOperator::new(&kernel, &grid);
        let physical: Vec<f64> = grid.nodes().iter().map(|&s| problem.space_map.to_physical(s)).collect();
        let u0: Vec<f64> = physical.iter().map(|&p| problem.u0.eval(p)).collect();
        let v0: Vec<f64> = physical.iter().map(|&p| problem.v0.eval(p)).collect();
        let tf = problem.time_factor();

        let forward = nodal_map(&grid, forward_in_place);
        let inverse = nodal_map(&grid, inverse_at_nodes);
        let d1 = &inverse * derivative_matrix(n, 1)?.entries() * &forward;
        let d2 = &inverse * derivative_matrix(n, 2)?.entries() * &forward * (tf * tf);
        let velocity_weights = d1.row(n).iter().map(|v| v * tf).collect();
        Ok(Self {
            problem: problem.clone(),
            grid,
            operator,
            u0,
            v0,
            time_factor: tf,
            d2,
            velocity_weights,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    pub fn operator(&self) -> &PeridynamicOperator {
        &self.operator
    }

    pub fn n_max(&self) -> usize {
        self.problem.n_max
    }

    /// `(N+1)²`.
    pub fn num_unknowns(&self) -> usize {
        self.grid.len() * self.grid.len()
    }

    /// `(N+1)(N+2)`.
    pub fn num_residuals(&self) -> usize {
        self.grid.len() * (self.grid.len() + 1)
    }

    /// Samples of `u₀` at the spatial nodes.
    pub fn u0_samples(&self) -> &[f64] {
        &self.u0
    }

    pub fn v0_samples(&self) -> &[f64] {
        &self.v0
    }

    /// `u₀(x_n) + v₀(x_n)·(t_m − t₀)` in physical time.
    pub fn initial_guess(&self) -> NodalField2D {
        let size = self.grid.len();
        let half = self.problem.time_map.half_length();
        let t = self.grid.nodes();
        NodalField2D::new(DMatrix::from_fn(size, size, |n, m| {
            self.u0[n] + self.v0[n] * (t[m] + 1.0) * half
        }))
    }

    pub fn residual(&self, unknowns: &NodalField2D) -> Result<ResidualVector> {
        unknowns.check_dims(&self.grid, &self.grid)?;
        if !unknowns.is_finite() {
            return Err(Error::NonFinite("unknowns"));
        }
        let u = unknowns.values();
        let size = self.grid.len();
        let n_max = size - 1;
        let utt = self.second_time_derivative(u);
        let lu = self.operator.apply_columns(u);

        let mut pde_rows = vec![0.0; size * n_max];
        for n in 0..size {
            for m in 1..size {
                pde_rows[n * n_max + m - 1] = utt[(n, m)] - lu[(n, m)];
            }
        }
        let ic_rows = (0..size).map(|n| u[(n, n_max)] - self.u0[n]).collect();
        let velocity_rows = (0..size)
            .map(|n| {
                let d: f64 = (0..size).map(|m| self.velocity_weights[m] * u[(n, m)]).sum();
                d - self.v0[n]
            })
            .collect();
        Ok(ResidualVector {
            pde_rows,
            ic_rows,
            velocity_rows,
        })
    }

    /// Second time derivative through the coefficient space: forward
    /// transform along time, `D̂` on each row, inverse transform.
    fn second_time_derivative(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let coeffs = along_time(u, &self.grid, forward_in_place);
        let (rows, cols) = coeffs.shape();
        let mut out = DMatrix::zeros(rows, cols);
        let mut row = vec![0.0; cols];
        let mut first = vec![0.0; cols];
        let mut second = vec![0.0; cols];
        for j in 0..rows {
            for (k, r) in row.iter_mut().enumerate() {
                *r = coeffs[(j, k)];
            }
            diff_slice(&row, &mut first);
            diff_slice(&first, &mut second);
            for (k, s) in second.iter().enumerate() {
                out[(j, k)] = *s * self.time_factor * self.time_factor;
            }
        }
        along_time(&out, &self.grid, inverse_at_nodes)
    }

    /// Exact Jacobian of the flattened residual with respect to the
    /// flattened unknowns, kept in factored form.
    pub fn jacobian_at(&self, unknowns: &NodalField2D) -> Result<SpaceTimeJacobian> {
        unknowns.check_dims(&self.grid, &self.grid)?;
        let u = unknowns.values();
        let size = self.grid.len();
        let lin: Vec<DMatrix<f64>> = (0..size)
            .into_par_iter()
            .map(|m| {
                if m == 0 {
                    DMatrix::zeros(size, size)
                } else {
                    let col: Vec<f64> = u.column(m).iter().copied().collect();
                    self.operator.linearization(&col)
                }
            })
            .collect();
        Ok(SpaceTimeJacobian {
            size,
            d2: self.d2.clone(),
            velocity_weights: self.velocity_weights.clone(),
            lin,
        })
    }

    pub fn field_from_flat(&self, x: &[f64]) -> Result<NodalField2D> {
        let size = self.grid.len();
        if x.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                actual: x.len(),
            });
        }
        Ok(NodalField2D::new(DMatrix::from_row_slice(size, size, x)))
    }

    /// Unknowns in solver order: index `n·(N+1) + m`.
    pub fn flat_from_field(&self, field: &NodalField2D) -> Vec<f64> {
        field.values().transpose().as_slice().to_vec()
    }
}

impl LeastSquaresProblem for SpaceTimeSystem {
    fn num_params(&self) -> usize {
        self.num_unknowns()
    }

    fn num_residuals(&self) -> usize {
        SpaceTimeSystem::num_residuals(self)
    }

    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.residual(&self.field_from_flat(x)?)?.to_vec())
    }

    fn jacobian(&self, x: &[f64]) -> Option<Result<Box<dyn JacobianOperator + '_>>> {
        Some(
            self.field_from_flat(x)
                .and_then(|f| self.jacobian_at(&f))
                .map(|j| Box::new(j) as Box<dyn JacobianOperator>),
        )
    }

    fn block_size(&self) -> usize {
        self.grid.len()
    }
}

/// Jacobian of the collocation residual. Columns follow the unknown order
/// `n·(N+1) + m`, rows the residual order (PDE, displacement, velocity).
/// Products use the tensor structure: the time-derivative matrix acts along
/// rows of the unknown field and the linearized operator of each time slice
/// acts along its column.
#[derive(Clone, Debug)]
pub struct SpaceTimeJacobian {
    size: usize,
    d2: DMatrix<f64>,
    velocity_weights: Vec<f64>,
    // Linearization of L on each time slice; slice 0 has no PDE rows.
    lin: Vec<DMatrix<f64>>,
}

impl SpaceTimeJacobian {
    pub fn to_sparse(&self) -> SparseColumns {
        let size = self.size;
        let n_max = size - 1;
        let ic_base = size * n_max;
        let vel_base = ic_base + size;
        let columns: Vec<Vec<(usize, f64)>> = (0..size * size)
            .into_par_iter()
            .map(|idx| {
                let (n, mp) = (idx / size, idx % size);
                let mut col = Vec::with_capacity(2 * size + 2);
                for m in 1..size {
                    let v = self.d2[(m, mp)];
                    if v != 0.0 {
                        col.push((n * n_max + m - 1, v));
                    }
                }
                if mp >= 1 {
                    for nn in 0..size {
                        col.push((nn * n_max + mp - 1, -self.lin[mp][(nn, n)]));
                    }
                }
                if mp == n_max {
                    col.push((ic_base + n, 1.0));
                }
                col.push((vel_base + n, self.velocity_weights[mp]));
                col
            })
            .collect();
        SparseColumns::from_columns(size * (size + 1), columns)
    }
}

impl JacobianOperator for SpaceTimeJacobian {
    fn nrows(&self) -> usize {
        self.size * (self.size + 1)
    }

    fn ncols(&self) -> usize {
        self.size * self.size
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        let size = self.size;
        let n_max = size - 1;
        let field = DMatrix::from_row_slice(size, size, v);
        let mut pde = &field * self.d2.transpose();
        for m in 1..size {
            let lv = &self.lin[m] * field.column(m);
            pde.column_mut(m).axpy(-1.0, &lv, 1.0);
        }
        let mut out = Vec::with_capacity(self.nrows());
        for n in 0..size {
            for m in 1..size {
                out.push(pde[(n, m)]);
            }
        }
        out.extend((0..size).map(|n| field[(n, n_max)]));
        let vw = DVector::from_column_slice(&self.velocity_weights);
        out.extend((&field * vw).iter());
        out
    }

    fn tr_mul(&self, w: &[f64]) -> Vec<f64> {
        let size = self.size;
        let n_max = size - 1;
        let ic_base = size * n_max;
        let vel_base = ic_base + size;
        let wp = DMatrix::from_fn(size, size, |n, m| if m == 0 { 0.0 } else { w[n * n_max + m - 1] });
        let mut g = &wp * &self.d2;
        for m in 1..size {
            let lt = self.lin[m].tr_mul(&wp.column(m));
            g.column_mut(m).axpy(-1.0, &lt, 1.0);
        }
        for n in 0..size {
            g[(n, n_max)] += w[ic_base + n];
            let wv = w[vel_base + n];
            for m in 0..size {
                g[(n, m)] += self.velocity_weights[m] * wv;
            }
        }
        g.transpose().as_slice().to_vec()
    }

    /// Blocks of one spatial node across all times. Columns `(n, p)` and
    /// `(n, q)` share only the time-coupling rows of node `n` and the two
    /// initial-condition rows, which gives each block in closed form.
    fn gram_blocks(&self, block: usize) -> Vec<DMatrix<f64>> {
        let size = self.size;
        if block != size {
            return self.to_sparse().gram_blocks(block);
        }
        let n_max = size - 1;
        // col_sq[m][n] = Σ_{n''} lin[m][n'', n]²
        let col_sq: Vec<Vec<f64>> = self
            .lin
            .iter()
            .map(|l| l.column_iter().map(|c| c.norm_squared()).collect())
            .collect();
        let vw = DVector::from_column_slice(&self.velocity_weights);
        let outer = &vw * vw.transpose();
        (0..size)
            .into_par_iter()
            .map(|n| {
                let mut e = self.d2.rows(1, n_max).into_owned();
                for m in 1..size {
                    e[(m - 1, m)] -= self.lin[m][(n, n)];
                }
                let mut g = e.transpose() * &e + &outer;
                for m in 1..size {
                    let d = self.lin[m][(n, n)];
                    g[(m, m)] += col_sq[m][n] - d * d;
                }
                g[(n_max, n_max)] += 1.0;
                g
            })
            .collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.to_sparse().to_dense()
    }
}

/// Matrix of a linear map on nodal vectors, built column by column.
fn nodal_map(grid: &ChebGrid, op: fn(&[f64], &ChebGrid, &mut [f64])) -> DMatrix<f64> {
    let size = grid.len();
    let mut m = DMatrix::zeros(size, size);
    let mut unit = vec![0.0; size];
    let mut out = vec![0.0; size];
    for j in 0..size {
        unit[j] = 1.0;
        op(&unit, grid, &mut out);
        unit[j] = 0.0;
        for i in 0..size {
            m[(i, j)] = out[i];
        }
    }
    m
}

/// The residual of `unknowns` for `problem`.
pub fn assemble_residual(unknowns: &NodalField2D, problem: &ProblemSpec) -> Result<ResidualVector> {
    SpaceTimeSystem::new(problem)?.residual(unknowns)
}

/// The first-order Taylor extension of the initial data across time.
pub fn initial_guess(problem: &ProblemSpec) -> Result<NodalField2D> {
    Ok(SpaceTimeSystem::new(problem)?.initial_guess())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Micromodulus;
    use crate::solver::lm::forward_difference_jacobian;
    use crate::solver::problem::{AffineMap, InitialData};

    fn problem(n: usize, u0: InitialData, v0: InitialData) -> ProblemSpec {
        ProblemSpec::new(n, Micromodulus::gaussian(0.1, false).unwrap(), u0, v0).unwrap()
    }

    #[test]
    fn constant_fields_have_zero_residual() {
        let p = problem(8, InitialData::constant(0.4), InitialData::zero());
        let field = NodalField2D::new(DMatrix::from_element(9, 9, 0.4));
        let r = assemble_residual(&field, &p).unwrap();
        assert_eq!(r.len(), 90);
        assert!(r.norm_inf() < 1e-12, "{}", r.norm_inf());
    }

    #[test]
    fn constant_field_with_unit_velocity() {
        let p = problem(8, InitialData::constant(0.4), InitialData::constant(1.0));
        let field = NodalField2D::new(DMatrix::from_element(9, 9, 0.4));
        let r = assemble_residual(&field, &p).unwrap();
        assert!(r.pde_rows.iter().chain(&r.ic_rows).all(|v| v.abs() < 1e-12));
        assert!(r.velocity_rows.iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn initial_guess_extends_the_data() {
        let p = problem(6, InitialData::zero(), InitialData::constant(1.0));
        let g = initial_guess(&p).unwrap();
        let grid = ChebGrid::new(6).unwrap();
        for m in 0..7 {
            for n in 0..7 {
                assert!((g.values()[(n, m)] - (grid.nodes()[m] + 1.0)).abs() < 1e-15);
            }
        }
        let p = problem(6, InitialData::function(|x| (-x * x).exp()), InitialData::zero());
        let g = initial_guess(&p).unwrap();
        for m in 0..7 {
            for n in 0..7 {
                assert!((g.values()[(n, m)] - (-grid.nodes()[n].powi(2)).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadratic_in_time_has_exact_second_derivative() {
        // u = t² with a zero kernel contribution only in the time part:
        // constant-in-space fields make L vanish.
        let p = problem(6, InitialData::constant(1.0), InitialData::constant(-2.0));
        let sys = SpaceTimeSystem::new(&p).unwrap();
        let t = sys.grid().nodes().to_vec();
        let field = NodalField2D::new(DMatrix::from_fn(7, 7, |_, m| t[m] * t[m]));
        let r = sys.residual(&field).unwrap();
        assert!(r.pde_rows.iter().all(|v| (v - 2.0).abs() < 1e-11));
        assert!(r.ic_rows.iter().all(|v| v.abs() < 1e-14));
        assert!(r.velocity_rows.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn time_map_scales_derivatives() {
        let p = problem(6, InitialData::zero(), InitialData::zero())
            .with_maps(AffineMap::identity(), AffineMap::new(0.0, 4.0).unwrap())
            .unwrap();
        let sys = SpaceTimeSystem::new(&p).unwrap();
        let t = sys.grid().nodes().to_vec();
        // Physical time τ = 2(t + 1); u = τ² has ü = 2 and u̇(0) = 0.
        let field = NodalField2D::new(DMatrix::from_fn(7, 7, |_, m| (2.0 * (t[m] + 1.0)).powi(2)));
        let r = sys.residual(&field).unwrap();
        assert!(r.pde_rows.iter().all(|v| (v - 2.0).abs() < 1e-10), "{:?}", r.pde_rows);
        assert!(r.velocity_rows.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let p = problem(6, InitialData::function(|x| (-x * x).exp()), InitialData::zero());
        let sys = SpaceTimeSystem::new(&p).unwrap();
        let grid = sys.grid().clone();
        let field = NodalField2D::from_fn(&grid, &grid, |x, t| (-x * x).exp() * (1.0 + 0.2 * t) + 0.1 * x * t);
        let x = sys.flat_from_field(&field);
        let r0 = sys.residuals(&x).unwrap();
        let fd = forward_difference_jacobian(&sys, &x, &r0).unwrap();
        let jac = sys.jacobian_at(&field).unwrap();
        let exact = jac.to_dense();
        let gap = (&fd - &exact).abs().max();
        assert!(gap < 1e-5, "{gap}");
    }

    #[test]
    fn structured_products_match_the_assembled_matrix() {
        let p = problem(7, InitialData::function(|x| (-x * x).exp()), InitialData::zero());
        let sys = SpaceTimeSystem::new(&p).unwrap();
        let grid = sys.grid().clone();
        let field = NodalField2D::from_fn(&grid, &grid, |x, t| (2.0 * x).sin() * (1.0 + t * t));
        let jac = sys.jacobian_at(&field).unwrap();
        let sparse = jac.to_sparse();
        let v: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..72).map(|i| (i as f64 * 0.91).cos()).collect();
        for (a, b) in jac.mul(&v).iter().zip(sparse.mul(&v)) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} {b}");
        }
        for (a, b) in jac.tr_mul(&w).iter().zip(sparse.tr_mul(&w)) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} {b}");
        }
        let fast = jac.gram_blocks(8);
        let slow = sparse.gram_blocks(8);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs().max() < 1e-9 * b.abs().max(), "{a} {b}");
        }
    }

    #[test]
    fn flat_round_trip() {
        let p = problem(4, InitialData::zero(), InitialData::zero());
        let sys = SpaceTimeSystem::new(&p).unwrap();
        let x: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let f = sys.field_from_flat(&x).unwrap();
        assert_eq!(f.values()[(1, 2)], 7.0);
        assert_eq!(sys.flat_from_field(&f), x);
    }

    #[test]
    fn non_finite_unknowns_are_rejected() {
        let p = problem(4, InitialData::zero(), InitialData::zero());
        let mut field = NodalField2D::zeros(4, 4);
        field.values_mut()[(2, 2)] = f64::INFINITY;
        assert!(matches!(assemble_residual(&field, &p), Err(Error::NonFinite(_))));
    }
}
