//! Convergence, comparison and timing studies, and their CSV and manifest
//! outputs.

mod config;
mod output;
mod studies;
mod tables;

pub use config::{ExperimentConfig, ExperimentKind, InitialCondition, KernelConfig};
pub use output::{emit_outputs, timestamp, write_atomic, OutputPaths};
pub use studies::{
    run, run_bench, run_compare, run_discontinuous, run_solve, run_validation, solve_ladder, solver_options,
    BenchReport, CompareReport, CompareRow, ErrorStudy, RunOutcome, SolveRun, SolveSummary,
};
pub use tables::{format_float, relative_error, CsvTable, ErrorRow, ErrorTable, TimingRow, TimingTable};
