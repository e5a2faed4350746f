use approx::assert_relative_eq;
use perichev::cheb::{derivative_matrix, diff_coeffs, forward_1d, gauss_lobatto_grid, inverse_1d_on_grid, Coeffs1D};
use perichev::experiments::{
    relative_error, CsvTable, ErrorTable, ExperimentConfig, ExperimentKind, InitialCondition, KernelConfig,
};
use perichev::newmark::{newmark_step_with, MarchState, NewmarkParams};
use perichev::operator::{ConvolutionMode, Micromodulus, PeridynamicOperator};
use perichev::solver::{dismodel_tolerance, ToleranceSpec};
use proptest::prelude::*;

fn samples(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (2..=max_n).prop_flat_map(|n| prop::collection::vec(-1.0..1.0f64, n + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(u in samples(96)) {
        let grid = gauss_lobatto_grid(u.len() - 1).unwrap();
        let back = inverse_1d_on_grid(&forward_1d(&u, &grid).unwrap(), &grid).unwrap();
        for (a, b) in back.iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn transform_is_linear(u in samples(40), s in -3.0..3.0f64) {
        let grid = gauss_lobatto_grid(u.len() - 1).unwrap();
        let v: Vec<f64> = u.iter().map(|x| x.sin()).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + b).collect();
        let (cu, cv, cw) = (
            forward_1d(&u, &grid).unwrap(),
            forward_1d(&v, &grid).unwrap(),
            forward_1d(&w, &grid).unwrap(),
        );
        for k in 0..u.len() {
            prop_assert!((cw.values()[k] - s * cu.values()[k] - cv.values()[k]).abs() <= 1e-13);
        }
    }

    #[test]
    fn recurrence_matches_matrix(c in samples(80)) {
        let n = c.len() - 1;
        let coeffs = Coeffs1D::new(c);
        let fast = diff_coeffs(&coeffs);
        let slow = derivative_matrix(n, 1).unwrap().apply(&coeffs).unwrap();
        let scale = slow.values().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for (a, b) in fast.values().iter().zip(slow.values()) {
            prop_assert!((a - b).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn operator_is_odd_and_shift_invariant(u in prop::collection::vec(-1.0..1.0f64, 17), shift in -2.0..2.0f64) {
        let grid = gauss_lobatto_grid(16).unwrap();
        let op = PeridynamicOperator::new(&Micromodulus::gaussian(0.3, false).unwrap(), &grid);
        let lu = op.apply(&u, ConvolutionMode::Fast).unwrap();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let shifted: Vec<f64> = u.iter().map(|x| x + shift).collect();
        let l_neg = op.apply(&neg, ConvolutionMode::Fast).unwrap();
        let l_shift = op.apply(&shifted, ConvolutionMode::Fast).unwrap();
        let scale = lu.iter().fold(1e-3_f64, |m, x| m.max(x.abs()));
        for i in 0..u.len() {
            prop_assert!((l_neg[i] + lu[i]).abs() <= 1e-12 * scale);
            prop_assert!((l_shift[i] - lu[i]).abs() <= 1e-9 * scale, "{} vs {}", l_shift[i], lu[i]);
        }
    }

    #[test]
    fn relative_error_is_scale_free(u in prop::collection::vec(0.1..2.0f64, 1..20), s in 0.1..10.0f64) {
        let r: Vec<f64> = u.iter().map(|x| x * 1.01 + 0.001).collect();
        let e = relative_error(&u, &r).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(relative_error(&u, &u).unwrap(), 0.0);
        let us: Vec<f64> = u.iter().map(|x| x * s).collect();
        let rs: Vec<f64> = r.iter().map(|x| x * s).collect();
        prop_assert!((relative_error(&us, &rs).unwrap() - e).abs() <= 1e-12 * e.max(1e-300));
    }

    #[test]
    fn rates_are_log_ratios_of_the_logged_errors(errors in prop::collection::vec(1e-12..1.0f64, 2..6)) {
        let entries: Vec<(usize, f64, bool)> =
            errors.iter().enumerate().map(|(i, &e)| (16 << i, e, true)).collect();
        let table = ErrorTable::from_errors(&entries);
        // The check runs on the values as written to the CSV.
        let csv = table.to_csv();
        let parsed: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        for i in 1..parsed.len() {
            let prev: f64 = parsed[i - 1][1].parse().unwrap();
            let cur: f64 = parsed[i][1].parse().unwrap();
            let rate: f64 = parsed[i][2].parse().unwrap();
            prop_assert!((rate - (prev / cur).log2()).abs() <= 1e-12);
        }
        prop_assert_eq!(parsed[0][2], "");
    }

    #[test]
    fn config_round_trip(
        kind in prop_oneof![
            Just(ExperimentKind::Validate),
            Just(ExperimentKind::Discontinuous),
            Just(ExperimentKind::Compare),
            Just(ExperimentKind::Bench),
            Just(ExperimentKind::Solve),
        ],
        start in 2usize..20,
        count in 1usize..4,
        horizon in 0.01..0.99f64,
        truncate: bool,
        amplitude in 0.0..5.0f64,
        alpha in 0.01..1.0f64,
        seed: u64,
    ) {
        let mut config = ExperimentConfig::default_for(kind);
        config.n_values = (0..count).map(|i| start << i).collect();
        config.horizon = horizon;
        config.kernel = KernelConfig { truncate, amplitude, rate: 1.0 };
        config.alpha = alpha;
        config.seed = seed;
        if kind == ExperimentKind::Solve {
            config.ic = InitialCondition::Linear;
        }
        let back = ExperimentConfig::from_json(&config.to_json()).unwrap();
        prop_assert_eq!(back, config);
    }

    #[test]
    fn diagnostic_tolerance_decreases_with_degree(n in 2usize..2000, alpha in 0.05..1.0f64) {
        let spec = ToleranceSpec::power(alpha);
        let a = dismodel_tolerance(n, &spec).unwrap();
        let b = dismodel_tolerance(n + 1, &spec).unwrap();
        prop_assert!(a > 0.0 && b < a);
    }

    #[test]
    fn average_acceleration_conserves_oscillator_energy(u in -2.0..2.0f64, v in -2.0..2.0f64, dt in 0.01..0.5f64) {
        let params = NewmarkParams { tolerance: 1e-14, max_sweeps: 500, ..NewmarkParams::default() };
        let mut state = MarchState { time: 0.0, displacement: vec![u], velocity: vec![v], acceleration: vec![-u] };
        for _ in 0..10 {
            state = newmark_step_with(&state, dt, &params, |x| Ok(vec![-x[0]])).unwrap();
        }
        let energy = state.displacement[0].powi(2) + state.velocity[0].powi(2);
        prop_assert!((energy - (u * u + v * v)).abs() <= 1e-10 * (1.0 + u * u + v * v));
    }
}

#[test]
fn endpoint_derivatives_of_chebyshev_polynomials() {
    for n in 1..=24usize {
        let d = diff_coeffs(&Coeffs1D::unit(n, n));
        let nf = n as f64;
        assert_relative_eq!(d.eval(1.0).unwrap(), nf * nf, max_relative = 1e-13);
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        assert_relative_eq!(d.eval(-1.0).unwrap(), sign * nf * nf, max_relative = 1e-13);
    }
}
