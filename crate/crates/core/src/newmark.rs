//! Chebyshev collocation in space marched in time with the implicit
//! Newmark-β scheme,
//!
//! ```text
//! u⁺ = u + Δt v + Δt² ((1/2 − β) a + β a⁺),
//! v⁺ = v + Δt ((1 − γ) a + γ a⁺),      a⁺ = L u⁺,
//! ```
//!
//! with the implicit acceleration found by fixed-point sweeps.

use crate::error::{Error, Result};
use crate::operator::{ConvolutionMode, PeridynamicOperator};
use crate::solver::{ProblemSpec, SpaceTimeSystem};

/// Snapshot of the semi-discrete state at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct MarchState {
    pub time: f64,
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
    /// Sweeps stop once the acceleration update is below this (∞-norm).
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for NewmarkParams {
    /// Average acceleration: `β = 1/4`, `γ = 1/2`.
    fn default() -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
            tolerance: 1e-10,
            max_sweeps: 50,
        }
    }
}

impl NewmarkParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.beta) {
            return Err(Error::InvalidOptions(format!(
                "beta must lie in [0, 1/2], got {}",
                self.beta
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidOptions(
                "sweep tolerance and count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One step with an arbitrary force law `a = force(u)`.
pub fn newmark_step_with<F>(state: &MarchState, dt: f64, params: &NewmarkParams, force: F) -> Result<MarchState>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidOptions(format!("time step must be positive, got {dt}")));
    }
    let len = state.displacement.len();
    if state.velocity.len() != len || state.acceleration.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: state.velocity.len().min(state.acceleration.len()),
        });
    }
    let predictor: Vec<f64> = (0..len)
        .map(|i| state.displacement[i] + dt * state.velocity[i] + dt * dt * (0.5 - params.beta) * state.acceleration[i])
        .collect();
    let bdt2 = params.beta * dt * dt;
    let displacement_for = |a: &[f64]| -> Vec<f64> { predictor.iter().zip(a).map(|(p, a)| p + bdt2 * a).collect() };

    let mut accel = state.acceleration.clone();
    let mut update = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < params.max_sweeps {
        let next = force(&displacement_for(&accel))?;
        update = next.iter().zip(&accel).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        accel = next;
        sweeps += 1;
        if update <= params.tolerance {
            break;
        }
    }
    if !(update <= params.tolerance) {
        return Err(Error::InnerIteration {
            sweeps,
            last_update: update,
        });
    }
    let displacement = displacement_for(&accel);
    let velocity = (0..len)
        .map(|i| state.velocity[i] + dt * ((1.0 - params.gamma) * state.acceleration[i] + params.gamma * accel[i]))
        .collect();
    Ok(MarchState {
        time: state.time + dt,
        displacement,
        velocity,
        acceleration: accel,
    })
}

/// One step of the peridynamic dynamics, `a = L u` in fast mode.
pub fn newmark_step(
    state: &MarchState,
    dt: f64,
    params: &NewmarkParams,
    operator: &PeridynamicOperator,
) -> Result<MarchState> {
    newmark_step_with(state, dt, params, |u| operator.apply(u, ConvolutionMode::Fast))
}

/// Marches the problem across its whole time interval with uniform steps,
/// starting from `a₀ = L u₀`. The step must divide the interval.
pub fn run_newmark(problem: &ProblemSpec, dt: f64, params: &NewmarkParams) -> Result<Vec<MarchState>> {
    let system = SpaceTimeSystem::new(problem)?;
    march(&system, dt, params)
}

/// [`run_newmark`] reusing an assembled system (grid, operator, samples).
pub fn march(system: &SpaceTimeSystem, dt: f64, params: &NewmarkParams) -> Result<Vec<MarchState>> {
    let map = system.problem().time_map;
    let span = map.hi() - map.lo();
    let steps = (span / dt).round();
    if !(dt > 0.0) || steps < 1.0 || (steps * dt - span).abs() > 1e-9 * span {
        return Err(Error::InvalidOptions(format!(
            "time step {dt} does not divide the interval length {span}"
        )));
    }
    let steps = steps as usize;
    let operator = system.operator();
    let u0 = system.u0_samples().to_vec();
    let a0 = operator.apply(&u0, ConvolutionMode::Fast)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(MarchState {
        time: map.lo(),
        displacement: u0,
        velocity: system.v0_samples().to_vec(),
        acceleration: a0,
    });
    for k in 0..steps {
        let mut next = newmark_step(&states[k], dt, params, operator)?;
        // Avoid drift in the clock from repeated addition.
        next.time = map.lo() + (k + 1) as f64 * dt;
        states.push(next);
    }
    Ok(states)
}

/// Observed temporal order from final displacements at `dt`, `dt/2` and
/// `dt/4`: `log₂(‖u_dt − u_{dt/2}‖∞ / ‖u_{dt/2} − u_{dt/4}‖∞)`.
pub fn richardson_order(system: &SpaceTimeSystem, dt: f64, params: &NewmarkParams) -> Result<f64> {
    let finals: Vec<Vec<f64>> = [dt, dt / 2.0, dt / 4.0]
        .iter()
        .map(|&h| march(system, h, params).map(|s| s.last().expect("at least one state").displacement.clone()))
        .collect::<Result<_>>()?;
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let coarse = gap(&finals[0], &finals[1]);
    let fine = gap(&finals[1], &finals[2]);
    if fine == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((coarse / fine).log2())
}
