//! Levenberg–Marquardt for nonlinear least squares, `min ½‖r(x)‖²`.
//!
//! Each iteration solves the damped normal equations
//! `(JᵀJ + λ diag(JᵀJ)) δ = −Jᵀr`. A step is accepted when it lowers the
//! sum of squares; `λ` then shrinks by `damping_down`, otherwise it grows by
//! `damping_up` and the step is recomputed. Small systems are factorized
//! densely; larger ones go through block-preconditioned conjugate gradients
//! on a sparse Jacobian.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::{damped_normal_pcg, norm2, norm_inf, JacobianOperator, SparseColumns};
use super::tolerance::ToleranceSpec;
use crate::error::{Error, Result};

/// How the Jacobian is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// Forward differences with step `1e-7 · (1 + |x_j|)`.
    ForwardDifference,
    /// The problem's own Jacobian (falls back to forward differences when
    /// the problem does not provide one).
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop once `‖r‖_∞` falls to this level.
    pub residual_target: f64,
    pub damping_init: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub jacobian_mode: JacobianMode,
    /// Give up after this many consecutive rejected steps.
    pub max_rejections: usize,
    /// Above this many unknowns the normal equations are solved iteratively.
    pub dense_limit: usize,
    /// Stop once `‖r‖₂` has failed to halve over this many accepted steps
    /// while `‖r‖_∞ ≤ stagnation_level`; `0` disables the test. Useful when
    /// the residual target lies below the round-off floor of the system.
    pub stagnation_window: usize,
    pub stagnation_level: f64,
    pub tolerance: ToleranceSpec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            residual_target: 1e-8,
            damping_init: 1e-3,
            damping_up: 2.0,
            damping_down: 1.0 / 3.0,
            jacobian_mode: JacobianMode::ForwardDifference,
            max_rejections: 40,
            dense_limit: 128,
            stagnation_window: 0,
            stagnation_level: 1e-6,
            tolerance: ToleranceSpec::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidOptions(m.to_string()));
        if !(self.damping_init > 0.0 && self.damping_init.is_finite()) {
            return bad("damping_init must be positive");
        }
        if !(self.residual_target >= 0.0) {
            return bad("residual_target must be non-negative");
        }
        if !(self.damping_up > 1.0) {
            return bad("damping_up must exceed 1");
        }
        if !(self.damping_down > 0.0 && self.damping_down < 1.0) {
            return bad("damping_down must lie in (0, 1)");
        }
        self.tolerance.validate()
    }
}

/// A nonlinear least-squares problem.
pub trait LeastSquaresProblem: Sync {
    fn num_params(&self) -> usize;
    fn num_residuals(&self) -> usize;
    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// The Jacobian at `x`, if the problem can provide it directly.
    fn jacobian(&self, _x: &[f64]) -> Option<Result<Box<dyn JacobianOperator + '_>>> {
        None
    }

    /// Width of the column groups used for block preconditioning.
    fn block_size(&self) -> usize {
        self.num_params()
    }
}

/// Adapts a residual closure.
pub struct ClosureProblem<F> {
    num_params: usize,
    num_residuals: usize,
    f: F,
}

impl<F> ClosureProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(num_params: usize, num_residuals: usize, f: F) -> Self {
        Self {
            num_params,
            num_residuals,
            f,
        }
    }
}

impl<F> LeastSquaresProblem for ClosureProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn num_params(&self) -> usize {
        self.num_params
    }

    fn num_residuals(&self) -> usize {
        self.num_residuals
    }

    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }
}

/// Why the iteration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTarget,
    SmallStep,
    MaxIterations,
    /// Too many consecutive rejections, or the damping blew up.
    Stalled,
    /// Accepted steps stopped making progress near the round-off floor.
    Stagnated,
}

impl Termination {
    /// The iteration came to rest: either the target was met or the steps
    /// and the decrease dried up. An overdetermined system settles at its
    /// least-squares minimum, which may sit above the target.
    pub fn settled(self) -> bool {
        matches!(
            self,
            Termination::ResidualTarget | Termination::SmallStep | Termination::Stagnated
        )
    }
}

#[derive(Clone, Debug)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `‖r‖_∞` at the start and after every accepted step.
    pub residual_history: Vec<f64>,
    /// `‖r‖₂` at the same points; strictly decreasing.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub final_residual_inf: f64,
    pub final_residual_l2: f64,
}

/// Forward-difference Jacobian, one column per parameter, in parallel.
pub fn forward_difference_jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    r0: &[f64],
) -> Result<DMatrix<f64>> {
    let m = r0.len();
    let columns: Result<Vec<Vec<f64>>> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.to_vec();
            xp[j] += h;
            let rp = problem.residuals(&xp)?;
            Ok(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect())
        })
        .collect();
    let columns = columns?;
    Ok(DMatrix::from_fn(m, x.len(), |i, j| columns[j][i]))
}

enum Linearization<'a> {
    Dense {
        jtj: DMatrix<f64>,
    },
    Iterative {
        jac: Box<dyn JacobianOperator + 'a>,
        blocks: Vec<DMatrix<f64>>,
        block: usize,
    },
}

/// Minimizes `½‖r(x)‖²` from `start`.
pub fn levenberg_marquardt<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    start: &[f64],
    options: &SolverOptions,
) -> Result<LmReport> {
    options.validate()?;
    let n = problem.num_params();
    if start.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: start.len(),
        });
    }
    let mut x = start.to_vec();
    let mut r = problem.residuals(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial residual"));
    }
    let mut cost = 0.5 * norm2(&r).powi(2);
    let mut history = vec![norm_inf(&r)];
    let mut objective = vec![norm2(&r)];
    let mut lambda = options.damping_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < options.max_iterations {
        if norm_inf(&r) <= options.residual_target {
            termination = Termination::ResidualTarget;
            break;
        }
        iterations += 1;

        let (lin, diag, grad) = linearize(problem, &x, &r, options)?;
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();

        let mut rejections = 0;
        let mut accepted = false;
        let mut small_step = false;
        while rejections <= options.max_rejections && lambda < 1e20 {
            let step = match &lin {
                Linearization::Dense { jtj } => solve_dense(jtj, &diag, lambda, &neg_grad),
                Linearization::Iterative { jac, blocks, block } => {
                    damped_normal_pcg(jac.as_ref(), blocks, *block, &diag, lambda, &neg_grad, 1e-10, 2000)
                        .map(|o| o.solution)
                }
            };
            let Some(step) = step else {
                lambda *= options.damping_up;
                rejections += 1;
                continue;
            };
            if norm_inf(&step) < 1e-14 * (1.0 + norm_inf(&x)) {
                small_step = true;
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let trial_r = problem.residuals(&trial)?;
            let trial_cost = 0.5 * norm2(&trial_r).powi(2);
            if trial_cost.is_finite() && trial_cost < cost {
                x = trial;
                r = trial_r;
                cost = trial_cost;
                lambda = (lambda * options.damping_down).max(1e-30);
                accepted = true;
                break;
            }
            lambda *= options.damping_up;
            rejections += 1;
        }
        if accepted {
            history.push(norm_inf(&r));
            objective.push(norm2(&r));
            let w = options.stagnation_window;
            if w > 0
                && objective.len() > w
                && norm_inf(&r) <= options.stagnation_level
                && objective[objective.len() - 1] > 0.5 * objective[objective.len() - 1 - w]
            {
                termination = Termination::Stagnated;
                break;
            }
            continue;
        }
        termination = if small_step {
            Termination::SmallStep
        } else {
            Termination::Stalled
        };
        break;
    }
    if termination == Termination::MaxIterations && norm_inf(&r) <= options.residual_target {
        termination = Termination::ResidualTarget;
    }
    let final_inf = norm_inf(&r);
    Ok(LmReport {
        params: x,
        final_residual_l2: norm2(&r),
        residuals: r,
        residual_history: history,
        objective_history: objective,
        iterations,
        converged: final_inf <= options.residual_target,
        termination,
        final_residual_inf: final_inf,
    })
}

fn linearize<'a, P: LeastSquaresProblem + ?Sized>(
    problem: &'a P,
    x: &[f64],
    r: &[f64],
    options: &SolverOptions,
) -> Result<(Linearization<'a>, Vec<f64>, Vec<f64>)> {
    let provided = match options.jacobian_mode {
        JacobianMode::Analytic => problem.jacobian(x).transpose()?,
        JacobianMode::ForwardDifference => None,
    };
    let n = x.len();
    if n <= options.dense_limit {
        let jac = match provided {
            Some(op) => op.to_dense(),
            None => forward_difference_jacobian(problem, x, r)?,
        };
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("jacobian"));
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.tr_mul(&DVector::from_column_slice(r));
        let diag = scaled_diagonal(jtj.diagonal().iter().copied());
        return Ok((Linearization::Dense { jtj }, diag, grad.iter().copied().collect()));
    }
    let jac: Box<dyn JacobianOperator + 'a> = match provided {
        Some(op) => op,
        None => Box::new(SparseColumns::from_dense(&forward_difference_jacobian(problem, x, r)?)),
    };
    let grad = jac.tr_mul(r);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jacobian"));
    }
    let block = problem.block_size().clamp(1, n);
    let blocks = jac.gram_blocks(block);
    let diag = scaled_diagonal(
        blocks
            .iter()
            .flat_map(|b| b.diagonal().iter().copied().collect::<Vec<_>>()),
    );
    Ok((Linearization::Iterative { jac, blocks, block }, diag, grad))
}

// Columns that vanish entirely would leave the damping term singular.
fn scaled_diagonal(d: impl Iterator<Item = f64>) -> Vec<f64> {
    d.map(|v| v.max(1e-30)).collect()
}

fn solve_dense(jtj: &DMatrix<f64>, diag: &[f64], lambda: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let mut a = jtj.clone();
    for (i, d) in diag.iter().enumerate() {
        a[(i, i)] += lambda * d;
    }
    let chol = Cholesky::new(a)?;
    let sol = chol.solve(&DVector::from_column_slice(rhs));
    if sol.iter().all(|v| v.is_finite()) {
        Some(sol.iter().copied().collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scalar_problem() {
        let p = ClosureProblem::new(1, 1, |x: &[f64]| vec![x[0] - 3.0]);
        let options = SolverOptions {
            residual_target: 1e-13,
            ..SolverOptions::default()
        };
        let out = levenberg_marquardt(&p, &[0.0], &options).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rosenbrock() {
        let p = ClosureProblem::new(2, 2, |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let options = SolverOptions {
            residual_target: 1e-12,
            ..SolverOptions::default()
        };
        let out = levenberg_marquardt(&p, &[-1.2, 1.0], &options).unwrap();
        assert!(out.converged, "{:?}", out.termination);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8);
        assert!(out.objective_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn iterative_path_matches_dense_path() {
        let f = |x: &[f64]| -> Vec<f64> {
            let mut r: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * v * v + v - i as f64 * 0.1)
                .collect();
            r.push(x.iter().sum::<f64>() - 1.0);
            r
        };
        let p = ClosureProblem::new(12, 13, f);
        let dense = levenberg_marquardt(&p, &[0.0; 12], &SolverOptions::default()).unwrap();
        let options = SolverOptions {
            dense_limit: 4,
            ..SolverOptions::default()
        };
        let sparse = levenberg_marquardt(&p, &[0.0; 12], &options).unwrap();
        for (a, b) in dense.params.iter().zip(&sparse.params) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn non_finite_start_aborts() {
        let p = ClosureProblem::new(1, 1, |x: &[f64]| vec![x[0].ln()]);
        assert!(matches!(
            levenberg_marquardt(&p, &[-1.0], &SolverOptions::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rejects_bad_options() {
        let p = ClosureProblem::new(1, 1, |x: &[f64]| vec![x[0]]);
        let options = SolverOptions {
            damping_init: 0.0,
            ..SolverOptions::default()
        };
        assert!(levenberg_marquardt(&p, &[1.0], &options).is_err());
        assert!(levenberg_marquardt(&p, &[1.0, 2.0], &SolverOptions::default()).is_err());
    }

    #[test]
    fn trial_points_outside_the_domain_are_rejected() {
        // r = sqrt(x) - 1 is NaN for x < 0; a full Newton step from 4 lands
        // at 0, then damping keeps later trials finite.
        let p = ClosureProblem::new(1, 1, |x: &[f64]| vec![x[0].sqrt() - 1.0]);
        let out = levenberg_marquardt(&p, &[9.0], &SolverOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-6);
    }
}
