mod cache;
mod commands;
mod config;
mod error;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Overrides, Scenario};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "kolambert",
    version,
    about = "Lambert targeting with Koopman-operator orbit propagation"
)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Include the J2 perturbation.
    #[arg(long, global = true, value_enum)]
    j2: Option<Toggle>,
    /// Largest total polynomial order of the basis.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Number of complete revolutions of the transfer.
    #[arg(long, global = true)]
    revs: Option<u32>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Permit models with more than 1000 basis functions.
    #[arg(long, global = true)]
    allow_large_model: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load from cache) the Koopman model and report its spectrum.
    BuildModel,
    /// Solve the configured transfer.
    Solve,
    /// Solve over a range of times of flight and plot the specific energy.
    Scan {
        /// Shortest time of flight in seconds
        #[arg(long)]
        tof_min: f64,
        /// Longest time of flight in seconds
        #[arg(long)]
        tof_max: f64,
        /// Number of grid points, ends included.
        #[arg(long, default_value_t = 41)]
        steps: usize,
    },
    /// Miss distances of the universal-variables and Koopman velocities with
    /// and without J2.
    Compare,
    /// Koopman against direct integration over many revolutions.
    Stress {
        /// Number of revolutions to propagate
        #[arg(long, default_value_t = 150)]
        periods: u32,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        j2: cli.j2.map(|t| matches!(t, Toggle::On)),
        order: cli.order,
        revolutions: cli.revs,
        out: cli.out,
    };
    let scenario = Scenario::load(cli.config.as_deref(), &overrides)?;
    let large = cli.allow_large_model;
    match cli.command {
        Command::BuildModel => commands::build_model(&scenario, large),
        Command::Solve => commands::solve_cmd(&scenario, large),
        Command::Scan {
            tof_min,
            tof_max,
            steps,
        } => commands::scan(&scenario, large, tof_min, tof_max, steps),
        Command::Compare => commands::compare(&scenario, large),
        Command::Stress { periods } => commands::stress(&scenario, large, periods),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
