use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hodograph::commands;

/// Solvers for the hyperbolic Monge-Ampere equation via the hodograph
/// transformation: Cauchy-Goursat solves on truncated cones, the semi-infinite
/// parametrix-corrector path, energy and stability experiments, and physical
/// surface reconstruction.
#[derive(Parser)]
#[command(name = "hodograph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value configuration file.
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the finite-cylinder Cauchy-Goursat problem.
    SolveCg(RunArgs),
    /// Solve the semi-infinite Goursat problem via parametrix and corrector.
    SolveGoursat(RunArgs),
    /// Line energies of a solved field, with a refinement convergence check.
    Energy(RunArgs),
    /// Linearized stability experiment under a curvature perturbation.
    Stability(RunArgs),
    /// Reconstruct the physical surface with fold detection.
    Reconstruct(RunArgs),
    /// Weak-compatibility validation of boundary data.
    Validate(RunArgs),
    /// Run the closed-form oracle residual suites.
    OracleCheck(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::SolveCg(a) => ("solve-cg", a),
        Command::SolveGoursat(a) => ("solve-goursat", a),
        Command::Energy(a) => ("energy", a),
        Command::Stability(a) => ("stability", a),
        Command::Reconstruct(a) => ("reconstruct", a),
        Command::Validate(a) => ("validate", a),
        Command::OracleCheck(a) => ("oracle-check", a),
    };
    let code = commands::run(name, &args.config, args.out.as_deref());
    ExitCode::from(code as u8)
}
