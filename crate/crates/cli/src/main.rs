use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use perichev::experiments::{emit_outputs, run, timestamp, ExperimentConfig, ExperimentKind, OutputPaths};
use perichev::Error;

#[derive(Parser)]
#[command(
    name = "perichev",
    version,
    about = "Space-time Chebyshev solver for 1D nonlinear peridynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at each degree and write final-time profiles.
    Solve(Common),
    /// Convergence table for smooth initial data.
    Validate(Common),
    /// Convergence table for the indicator initial displacement.
    Discontinuous(Common),
    /// Space-time collocation against Chebyshev/Newmark.
    Compare(Common),
    /// Residual and solve timings.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; the subcommand overrides its `experiment` field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing (overrides `output_path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated degrees (overrides `n_values`).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    n: Option<Vec<usize>>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Solve(c) => (ExperimentKind::Solve, c),
            Command::Validate(c) => (ExperimentKind::Validate, c),
            Command::Discontinuous(c) => (ExperimentKind::Discontinuous, c),
            Command::Compare(c) => (ExperimentKind::Compare, c),
            Command::Bench(c) => (ExperimentKind::Bench, c),
        }
    }
}

const EXIT_UNCONVERGED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Io { .. }
        | Error::InvalidKernel(_)
        | Error::InvalidProblem(_)
        | Error::InvalidOptions(_)
        | Error::DegenerateGrid(_) => EXIT_CONFIG,
        _ => EXIT_UNCONVERGED,
    }
}

fn load_config(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            // Parse without validating: the subcommand may change the experiment.
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default_for(kind),
    };
    config.experiment = kind;
    if let Some(n) = &args.n {
        config.n_values = n.clone();
    }
    if let Some(out) = &args.out {
        config.output_path = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    Ok(config)
}

fn execute(kind: ExperimentKind, args: &Common) -> Result<(OutputPaths, bool, String), Error> {
    let config = load_config(kind, args)?;
    let out_dir = Path::new(&config.output_path);
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let clock = Instant::now();
    let outcome = run(&config)?;
    let wall = clock.elapsed().as_secs_f64();
    let paths = emit_outputs(out_dir, &config, &outcome.tables, &outcome.summary, wall, &timestamp())?;
    let main_table = outcome.tables.first().map(|t| t.1.clone()).unwrap_or_default();
    Ok((paths, outcome.converged, main_table))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, &args) {
        Ok((paths, converged, table)) => {
            if !args.quiet {
                print!("{table}");
                for p in &paths.tables {
                    eprintln!("wrote {}", p.display());
                }
                eprintln!("wrote {}", paths.manifest.display());
            }
            if converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: at least one solve did not converge (see manifest.json)");
                ExitCode::from(EXIT_UNCONVERGED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
