//! The space-time collocation system and its least-squares solution.
//!
//! The unknowns are the nodal values `u(x_n, t_m)` on the tensor grid. Each
//! node with `m ≥ 1` contributes the equation `∂²ₜu − L u = 0`, and the
//! initial displacement and velocity add `2(N+1)` more, so the system has
//! `(N+1)(N+2)` equations in `(N+1)²` unknowns and is solved in the least
//! squares sense.

mod lm;
mod problem;
mod residual;
mod sparse;
mod tolerance;

pub use lm::{
    forward_difference_jacobian, levenberg_marquardt, ClosureProblem, JacobianMode, LeastSquaresProblem, LmReport,
    SolverOptions, Termination,
};
pub use problem::{AffineMap, InitialData, ProblemSpec};
pub use residual::{assemble_residual, initial_guess, ResidualVector, SpaceTimeJacobian, SpaceTimeSystem};
pub use sparse::{JacobianOperator, SparseColumns};
pub use tolerance::{dismodel_tolerance, ModulusKind, ToleranceSpec};

use std::time::Instant;

use nalgebra::DMatrix;

use crate::cheb::{forward_2d, inverse_2d, Coeffs2D, NodalField2D};
use crate::error::Result;

/// Outcome of a space-time solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub coeffs: Coeffs2D,
    pub nodal: NodalField2D,
    /// `‖r‖_∞` at the start and after every accepted step.
    pub residual_history: Vec<f64>,
    /// `‖r‖₂` at the same points.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub wall_time: f64,
    pub final_residual_inf: f64,
    pub final_residual_l2: f64,
    pub diagnostic_tolerance: f64,
}

/// Solves `problem` starting from the Taylor extension of its initial data.
pub fn solve(problem: &ProblemSpec, options: &SolverOptions) -> Result<SolveReport> {
    let system = SpaceTimeSystem::new(problem)?;
    let start = system.initial_guess();
    solve_system(&system, &start, options)
}

/// Solves an assembled system from an explicit starting field.
pub fn solve_system(system: &SpaceTimeSystem, start: &NodalField2D, options: &SolverOptions) -> Result<SolveReport> {
    options.validate()?;
    start.check_dims(system.grid(), system.grid())?;
    let clock = Instant::now();
    let report = levenberg_marquardt(system, &system.flat_from_field(start), options)?;
    assert!(
        report.objective_history.windows(2).all(|w| w[1] < w[0]),
        "accepted steps must reduce the residual norm"
    );
    let nodal = system.field_from_flat(&report.params)?;
    let coeffs = forward_2d(&nodal, system.grid(), system.grid())?;
    Ok(SolveReport {
        coeffs,
        nodal,
        residual_history: report.residual_history,
        objective_history: report.objective_history,
        iterations: report.iterations,
        converged: report.converged,
        termination: report.termination,
        wall_time: clock.elapsed().as_secs_f64(),
        final_residual_inf: report.final_residual_inf,
        final_residual_l2: report.final_residual_l2,
        diagnostic_tolerance: dismodel_tolerance(system.n_max(), &options.tolerance)?,
    })
}

/// A starting field for `system` from the series of a solve at another
/// degree: coefficients are zero-padded (or truncated), evaluated on the new
/// grid, and the initial-time column is reset to the sampled initial data.
pub fn prolongate(coeffs: &Coeffs2D, system: &SpaceTimeSystem) -> Result<NodalField2D> {
    let size = system.grid().len();
    let src = coeffs.values();
    let rows = src.nrows().min(size);
    let cols = src.ncols().min(size);
    let mut padded = DMatrix::zeros(size, size);
    padded
        .view_mut((0, 0), (rows, cols))
        .copy_from(&src.view((0, 0), (rows, cols)));
    let mut field = inverse_2d(&Coeffs2D::new(padded), system.grid(), system.grid())?;
    let last = size - 1;
    for (n, u) in system.u0_samples().iter().enumerate() {
        field.values_mut()[(n, last)] = *u;
    }
    Ok(field)
}
