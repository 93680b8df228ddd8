mod commands;
mod config;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slit_harmonic::Error;

/// Solvers and diagnostics for a-harmonic functions vanishing on a slit.
#[derive(Parser, Debug)]
#[command(name = "slit-harmonic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dirichlet solve of L_a u = 0 off the slit.
    Solve(commands::SolveArgs),
    /// Thin obstacle problem on y = 0.
    Obstacle(commands::ObstacleArgs),
    /// Spectral basis: Gram matrix and eigen-relation checks.
    Spectral(commands::SpectralArgs),
    /// Discrete a-harmonicity of the basis under grid refinement.
    BasisCheck(commands::BasisCheckArgs),
    /// Homogeneity and quotient expansions at free-boundary points or a given center.
    Regularity(commands::RegularityArgs),
    /// Regularized-distance estimate suite on a curved edge.
    DistanceCheck(commands::DistanceArgs),
    /// Sign of L_a on the barrier U_a - U_a^beta.
    BarrierCheck(commands::BarrierArgs),
    /// Render a CSV output as SVG.
    Plot(svg::PlotArgs),
}

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_NO_CONVERGENCE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SLIT_HARMONIC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("SLIT_HARMONIC_THREADS={v:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Obstacle(a) => commands::obstacle(a),
        Command::Spectral(a) => commands::spectral(a),
        Command::BasisCheck(a) => commands::basis_check(a),
        Command::Regularity(a) => commands::regularity(a),
        Command::DistanceCheck(a) => commands::distance_check(a),
        Command::BarrierCheck(a) => commands::barrier(a),
        Command::Plot(a) => svg::plot(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
                Error::Csv(_) => EXIT_DATA,
                _ => EXIT_FAILED_CHECK,
            })
        }
    }
}
