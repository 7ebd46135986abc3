//! Command-line front end: each command reads a JSON run configuration and
//! writes CSV/JSON files into the output directory.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "halfline", version, about = "Half-line NLS with plane-wave boundary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for grid solves (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Minimum panels per contour arc.
    #[arg(long, global = true)]
    resolution: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Scattering data a, b on the k grid and the discrete spectrum.
    Scatter,
    /// Boundary spectral functions A, B and their consistency checks.
    Tdata,
    /// q(x, t) on the x × t grid from the (x,t) problem.
    Solve,
    /// Boundary values q(0,t), q_x(0,t) from the t-problem.
    Boundary,
    /// Lens deformation and decay fits of the boundary corrections.
    Asymptotics,
    /// Dirichlet vs Neumann comparison of the two solution families.
    DtnDemo,
    /// Closed-form breather and plane wave on the grid.
    Oracle,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = &cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(EXIT_VALIDATION);
    };
    let cfg = match RunConfig::load(path).and_then(|c| c.validate(cli.resolution)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_VALIDATION);
    }
    let out = cli.out.as_path();
    let result = match cli.command {
        Command::Scatter => commands::scatter(&cfg, out),
        Command::Tdata => commands::tdata(&cfg, out),
        Command::Solve => commands::solve_field(&cfg, out),
        Command::Boundary => commands::boundary(&cfg, out),
        Command::Asymptotics => commands::asymptotics(&cfg, out),
        Command::Oracle => commands::oracle(&cfg, out),
        Command::DtnDemo => commands::dtn_demo(&cfg, out).map(|table| print!("{table}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
        }
    }
}
