use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bcs_cli::{commands, config, exit, CliResult, Options};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Couplings, chamber status and initial energy.
    Info,
    /// Constraint residuals and the energy identity at (q0, p0).
    Check,
    /// Verlet integration of the k = 1 flow to CSV.
    Simulate,
    /// Exact projection solver for the flow k to CSV.
    Solve,
    /// Verlet against the exact solver on shared sample times.
    Compare,
    /// Poisson bracket matrix of the reduced Hamiltonians.
    Involution,
}

/// Two-species BC(n) Sutherland model.
///
/// Exit codes: 0 success, 1 tolerance breach, 2 invalid input, 3 singularity
/// or chamber exit, 4 spectral breakdown. Set BCS_LOG=error|warn|info|debug
/// for diagnostics.
#[derive(Debug, Parser)]
#[command(name = "bcs", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output_path` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Pass/fail tolerance for check, compare and involution.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Extra random chamber points for involution.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Perturb the Lax matrix before check (fault injection).
    #[arg(long)]
    corrupt_lax: bool,
    /// Use one-shot diagonalisation instead of the segmented exact solver.
    #[arg(long)]
    direct: bool,
}

fn run(cli: &Cli) -> CliResult<bool> {
    let exp = config::load(&cli.config)?;
    let opts = Options {
        output: cli.output.clone(),
        tolerance: cli.tolerance,
        samples: cli.samples,
        corrupt_lax: cli.corrupt_lax,
        direct: cli.direct,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let passed = match cli.command {
        Command::Info => commands::info(&exp, &mut out)?,
        Command::Check => commands::check(&exp, &opts, &mut out)?,
        Command::Simulate => commands::simulate(&exp, &opts, &mut out)?,
        Command::Solve => commands::solve(&exp, &opts, &mut out)?,
        Command::Compare => commands::compare(&exp, &opts, &mut out)?,
        Command::Involution => commands::involution(&exp, &opts, &mut out)?,
    };
    out.flush().ok();
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BCS_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(true) => exit::OK,
        Ok(false) => exit::TOLERANCE,
        Err(e) => {
            eprintln!("bcs: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
