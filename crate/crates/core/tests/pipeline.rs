use std::fs;

use perichev::experiments::{emit_outputs, run, ExperimentConfig, ExperimentKind};
use perichev::newmark::{march, NewmarkParams};
use perichev::operator::Micromodulus;
use perichev::solver::{solve, solve_system, InitialData, JacobianMode, ProblemSpec, SolverOptions, SpaceTimeSystem};

fn small(kind: ExperimentKind, n_values: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        n_values,
        ..ExperimentConfig::default_for(kind)
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let config = small(ExperimentKind::Validate, vec![8, 12]);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut texts = Vec::new();
    for (i, dir) in dirs.iter().enumerate() {
        let outcome = run(&config).unwrap();
        let paths = emit_outputs(
            dir.path(),
            &config,
            &outcome.tables,
            &outcome.summary,
            0.0,
            &format!("run{i}"),
        )
        .unwrap();
        texts.push(fs::read(&paths.tables[0]).unwrap());
        let manifest: serde_json::Value = serde_json::from_slice(&fs::read(&paths.manifest).unwrap()).unwrap();
        assert_eq!(manifest["summary"]["reference_n"], 24);
    }
    assert_eq!(texts[0], texts[1]);
    let csv = String::from_utf8(texts.remove(0)).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn indicator_errors_exceed_smooth_errors() {
    let smooth = run(&small(ExperimentKind::Validate, vec![8, 12])).unwrap();
    let rough = run(&small(ExperimentKind::Discontinuous, vec![8, 12])).unwrap();
    let errors = |v: &serde_json::Value| -> Vec<f64> {
        v["table"]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["error"].as_f64().unwrap())
            .collect()
    };
    for (s, r) in errors(&smooth.summary).iter().zip(errors(&rough.summary)) {
        assert!(r > *s, "{r} <= {s}");
    }
}

#[test]
fn residual_has_one_row_per_equation() {
    for n in [4usize, 8, 16, 32] {
        let config = small(ExperimentKind::Bench, vec![n]);
        let system = SpaceTimeSystem::new(&config.problem(n).unwrap()).unwrap();
        let r = system.residual(&system.initial_guess()).unwrap();
        assert_eq!(r.len(), (n + 1) * (n + 2));
        assert_eq!(system.num_unknowns(), (n + 1) * (n + 1));
    }
}

#[test]
fn space_time_and_newmark_agree() {
    let problem = ProblemSpec::new(
        24,
        Micromodulus::gaussian(0.2, true).unwrap(),
        InitialData::function(|x| (-4.0 * x * x).exp()),
        InitialData::function(|x| 0.1 * x),
    )
    .unwrap();
    let options = SolverOptions {
        jacobian_mode: JacobianMode::Analytic,
        ..SolverOptions::default()
    };
    let report = solve(&problem, &options).unwrap();
    assert!(report.converged, "{:?}", report.termination);
    let system = SpaceTimeSystem::new(&problem).unwrap();
    let states = march(&system, 2.0 / 96.0, &NewmarkParams::default()).unwrap();
    let last = &states.last().unwrap().displacement;
    let gap = last
        .iter()
        .zip(report.nodal.time_slice(0))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn warm_start_from_the_solution_is_immediate() {
    let config = small(ExperimentKind::Solve, vec![16]);
    let system = SpaceTimeSystem::new(&config.problem(16).unwrap()).unwrap();
    let options = SolverOptions {
        jacobian_mode: JacobianMode::Analytic,
        ..SolverOptions::default()
    };
    let first = solve_system(&system, &system.initial_guess(), &options).unwrap();
    let again = solve_system(&system, &first.nodal, &options).unwrap();
    assert_eq!(again.iterations, 0);
    assert!(again.converged);
}
