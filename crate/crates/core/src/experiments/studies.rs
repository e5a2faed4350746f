use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, InitialCondition};
use super::tables::{format_float, relative_error, ErrorTable, TimingTable};
use crate::error::{Error, Result};
use crate::newmark::{march, richardson_order, NewmarkParams};
use crate::solver::{prolongate, solve_system, JacobianMode, SolveReport, SolverOptions, SpaceTimeSystem, Termination};

/// Options used by every study: analytic Jacobian, and a stagnation stop so
/// solves that reach the round-off floor above the target end quickly.
pub fn solver_options(config: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        jacobian_mode: JacobianMode::Analytic,
        stagnation_window: 5,
        tolerance: config.tolerance(),
        ..SolverOptions::default()
    }
}

/// The parts of a [`SolveReport`] worth keeping in a manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub n: usize,
    pub iterations: usize,
    /// `‖r‖_∞` reached the residual target.
    pub converged: bool,
    /// The iteration settled (see [`Termination::settled`]).
    pub settled: bool,
    pub termination: Termination,
    pub final_residual_inf: f64,
    pub final_residual_l2: f64,
    pub wall_seconds: f64,
    pub diagnostic_tolerance: f64,
}

impl SolveSummary {
    pub fn new(n: usize, report: &SolveReport) -> Self {
        Self {
            n,
            iterations: report.iterations,
            converged: report.converged,
            settled: report.termination.settled(),
            termination: report.termination,
            final_residual_inf: report.final_residual_inf,
            final_residual_l2: report.final_residual_l2,
            wall_seconds: report.wall_time,
            diagnostic_tolerance: report.diagnostic_tolerance,
        }
    }
}

/// Solves at each degree in turn, each one started from the previous
/// solution (the first from the Taylor guess). Rough data at high degree
/// does not converge from the Taylor guess, but does from a coarser solve.
pub fn solve_ladder(config: &ExperimentConfig, degrees: &[usize]) -> Result<Vec<SolveReport>> {
    let options = solver_options(config);
    let mut reports: Vec<SolveReport> = Vec::with_capacity(degrees.len());
    for &n in degrees {
        let system = SpaceTimeSystem::new(&config.problem(n)?)?;
        let start = match reports.last() {
            Some(prev) => prolongate(&prev.coeffs, &system)?,
            None => system.initial_guess(),
        };
        reports.push(solve_system(&system, &start, &options)?);
    }
    Ok(reports)
}

/// A convergence table against a finer self-converged reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorStudy {
    pub table: ErrorTable,
    pub reference_n: usize,
    pub reference: SolveSummary,
    pub solves: Vec<SolveSummary>,
}

/// Smooth-data study (Gaussian displacement, zero velocity).
pub fn run_validation(config: &ExperimentConfig) -> Result<ErrorStudy> {
    error_study(config, InitialCondition::Gaussian)
}

/// The same study with the indicator of `[0, 1]` as initial displacement.
pub fn run_discontinuous(config: &ExperimentConfig) -> Result<ErrorStudy> {
    error_study(config, InitialCondition::Indicator)
}

fn error_study(config: &ExperimentConfig, ic: InitialCondition) -> Result<ErrorStudy> {
    if config.ic != ic {
        return Err(Error::Config(format!(
            "this study needs the {ic:?} initial condition, got {:?}",
            config.ic
        )));
    }
    let max = *config
        .n_values
        .last()
        .ok_or_else(|| Error::Config("n_values is empty".into()))?;
    let reference_n = 2 * max;
    let mut degrees = config.n_values.clone();
    degrees.push(reference_n);
    let mut reports = solve_ladder(config, &degrees)?;
    let reference = reports.pop().expect("reference solve");

    let mut entries = Vec::with_capacity(reports.len());
    for (&n, report) in config.n_values.iter().zip(&reports) {
        // Column 0 of the time grid is the final time.
        let numerical = report.nodal.time_slice(0);
        let grid = crate::cheb::gauss_lobatto_grid(n)?;
        let exact = grid
            .nodes()
            .iter()
            .map(|&x| reference.coeffs.eval(x, 1.0))
            .collect::<Result<Vec<f64>>>()?;
        entries.push((n, relative_error(&numerical, &exact)?, report.termination.settled()));
    }
    Ok(ErrorStudy {
        table: ErrorTable::from_errors(&entries),
        reference_n,
        reference: SolveSummary::new(reference_n, &reference),
        solves: config
            .n_values
            .iter()
            .zip(&reports)
            .map(|(&n, r)| SolveSummary::new(n, r))
            .collect(),
    })
}

/// Final-time displacement of both methods at one degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub spacetime: Option<Vec<f64>>,
    pub newmark: Option<Vec<f64>>,
    /// `‖u_st − u_nm‖_∞` at the final time, when both methods ran.
    pub gap: Option<f64>,
    /// Largest deviation from `u₀` at the initial time, per method.
    pub spacetime_initial_gap: Option<f64>,
    pub newmark_initial_gap: Option<f64>,
    pub spacetime_solve: Option<SolveSummary>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub timings: TimingTable,
    /// Observed Newmark order at the largest degree (steps `dt`, `dt/2`, `dt/4`).
    pub newmark_order: Option<f64>,
}

impl CompareReport {
    pub fn all_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.failures.is_empty() && r.spacetime_solve.as_ref().is_some_and(|s| s.settled))
    }

    /// `n,x,spacetime,newmark` at the final time; missing values are empty.
    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("n,x,spacetime,newmark\n");
        let cell = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| format_float(v[i])).unwrap_or_default();
        for row in &self.rows {
            for (i, &x) in row.nodes.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n,
                    format_float(x),
                    cell(&row.spacetime, i),
                    cell(&row.newmark, i)
                ));
            }
        }
        out
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Space-time collocation against Chebyshev / Newmark-β with `β = 1/4`,
/// `γ = 1/2` and `N` uniform steps, on the same grid and kernel.
pub fn run_compare(config: &ExperimentConfig) -> Result<CompareReport> {
    let options = solver_options(config);
    let params = NewmarkParams::default();
    let mut rows = Vec::with_capacity(config.n_values.len());
    let mut timings = TimingTable::default();
    let mut newmark_order = None;
    // Untimed run so thread-pool start-up and FFT planning stay out of the table.
    if let Some(&n) = config.n_values.first() {
        let system = SpaceTimeSystem::new(&config.problem(n)?)?;
        let _ = solve_system(&system, &system.initial_guess(), &options);
    }
    for (k, &n) in config.n_values.iter().enumerate() {
        let system = SpaceTimeSystem::new(&config.problem(n)?)?;
        let u0 = system.u0_samples();
        let map = system.problem().time_map;
        let dt = (map.hi() - map.lo()) / n as f64;
        let mut row = CompareRow {
            n,
            nodes: system.grid().nodes().to_vec(),
            spacetime: None,
            newmark: None,
            gap: None,
            spacetime_initial_gap: None,
            newmark_initial_gap: None,
            spacetime_solve: None,
            failures: Vec::new(),
        };

        let clock = Instant::now();
        match solve_system(&system, &system.initial_guess(), &options) {
            Ok(report) => {
                timings.push(n, "spacetime", clock.elapsed().as_secs_f64());
                row.spacetime_initial_gap = Some(max_gap(&report.nodal.time_slice(n), u0));
                row.spacetime = Some(report.nodal.time_slice(0));
                row.spacetime_solve = Some(SolveSummary::new(n, &report));
            }
            Err(e) => row.failures.push(format!("spacetime: {e}")),
        }

        let clock = Instant::now();
        match march(&system, dt, &params) {
            Ok(states) => {
                timings.push(n, "newmark", clock.elapsed().as_secs_f64());
                row.newmark_initial_gap = Some(max_gap(&states[0].displacement, u0));
                row.newmark = states.last().map(|s| s.displacement.clone());
            }
            Err(e) => row.failures.push(format!("newmark: {e}")),
        }

        if let (Some(a), Some(b)) = (&row.spacetime, &row.newmark) {
            row.gap = Some(max_gap(a, b));
        }
        if k + 1 == config.n_values.len() {
            match richardson_order(&system, dt, &params) {
                Ok(order) => newmark_order = Some(order),
                Err(e) => row.failures.push(format!("newmark order: {e}")),
            }
        }
        rows.push(row);
    }
    Ok(CompareReport {
        rows,
        timings,
        newmark_order,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub timings: TimingTable,
    /// Log-log slope of the residual evaluation time against `N`.
    pub residual_slope: Option<f64>,
    pub residual_lengths: Vec<(usize, usize)>,
    pub solves: Vec<SolveSummary>,
}

/// Minimum over repetitions, with enough repetitions to fill a short budget.
fn time_min(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let budget = 0.2;
    let mut best = f64::INFINITY;
    let mut spent = 0.0;
    let mut reps = 0;
    while reps < 3 || (spent < budget && reps < 1000) {
        let clock = Instant::now();
        f()?;
        let t = clock.elapsed().as_secs_f64();
        best = best.min(t);
        spent += t;
        reps += 1;
    }
    Ok(best)
}

/// Times one residual evaluation (method `residual`) and one full solve
/// (method `solve`) per degree.
pub fn run_bench(config: &ExperimentConfig) -> Result<BenchReport> {
    let options = solver_options(config);
    let mut timings = TimingTable::default();
    let mut residual_lengths = Vec::new();
    let mut solves = Vec::new();
    for &n in &config.n_values {
        let system = SpaceTimeSystem::new(&config.problem(n)?)?;
        let guess = system.initial_guess();
        let len = system.residual(&guess)?.len();
        residual_lengths.push((n, len));
        let t = time_min(|| system.residual(&guess).map(|_| ()))?;
        timings.push(n, "residual", t);

        let report = solve_system(&system, &guess, &options)?;
        timings.push(n, "solve", report.wall_time);
        solves.push(SolveSummary::new(n, &report));
    }
    let residual_slope = timings.scaling_exponent("residual");
    Ok(BenchReport {
        timings,
        residual_slope,
        residual_lengths,
        solves,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveRun {
    pub timings: TimingTable,
    pub solves: Vec<SolveSummary>,
    /// `(n, nodes, final-time displacement)` per degree.
    pub profiles: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

impl SolveRun {
    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("n,x,u\n");
        for (n, nodes, u) in &self.profiles {
            for (x, u) in nodes.iter().zip(u) {
                out.push_str(&format!("{n},{},{}\n", format_float(*x), format_float(*u)));
            }
        }
        out
    }
}

/// Plain solves along the continuation ladder.
pub fn run_solve(config: &ExperimentConfig) -> Result<SolveRun> {
    let reports = solve_ladder(config, &config.n_values)?;
    let mut timings = TimingTable::default();
    let mut solves = Vec::new();
    let mut profiles = Vec::new();
    for (&n, report) in config.n_values.iter().zip(&reports) {
        timings.push(n, "spacetime", report.wall_time);
        solves.push(SolveSummary::new(n, report));
        let nodes = crate::cheb::gauss_lobatto_grid(n)?.nodes().to_vec();
        profiles.push((n, nodes, report.nodal.time_slice(0)));
    }
    Ok(SolveRun {
        timings,
        solves,
        profiles,
    })
}

/// Output of one experiment, ready to be written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// `(file-name suffix, CSV text)`; the main table has an empty suffix.
    pub tables: Vec<(&'static str, String)>,
    pub summary: serde_json::Value,
    /// False when a solve the run depends on did not settle.
    pub converged: bool,
}

/// Runs the experiment named in `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    use super::tables::CsvTable;
    config.validate()?;
    Ok(match config.experiment {
        ExperimentKind::Validate | ExperimentKind::Discontinuous => {
            let study = if config.experiment == ExperimentKind::Validate {
                run_validation(config)?
            } else {
                run_discontinuous(config)?
            };
            RunOutcome {
                tables: vec![("", study.table.to_csv())],
                converged: study.table.all_converged(),
                summary: json(&study),
            }
        }
        ExperimentKind::Compare => {
            let report = run_compare(config)?;
            RunOutcome {
                tables: vec![("", report.timings.to_csv()), ("_profiles", report.profiles_csv())],
                converged: report.all_ok(),
                summary: json(&report),
            }
        }
        ExperimentKind::Bench => {
            let report = run_bench(config)?;
            RunOutcome {
                tables: vec![("", report.timings.to_csv())],
                converged: true,
                summary: json(&report),
            }
        }
        ExperimentKind::Solve => {
            let run = run_solve(config)?;
            RunOutcome {
                tables: vec![("", run.timings.to_csv()), ("_profiles", run.profiles_csv())],
                converged: run.solves.iter().all(|s| s.settled),
                summary: json(&run),
            }
        }
    })
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report serializes")
}
