//! `trajthermo`: runs one experiment from a TOML configuration and writes
//! its artifacts plus a `manifest.json` into an output directory.
//!
//! Exit status is 0 on success, 2 for invalid input and 3 for numerical
//! failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::output::{versions, Manifest, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "trajthermo", version, about = "Trajectory thermodynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, env = "TRAJTHERMO_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Integrate the characteristic equations from an initial phase point.
    Integrate,
    /// Transport a phase-space loop and measure the change of its integral.
    LoopInvariant,
    /// List every lattice path with its action.
    Enumerate,
    /// Exact canonical ensemble over a path lattice.
    Ensemble,
    /// Find β reproducing a target mean action.
    SolveBeta,
    /// Metropolis sampling (or annealing) of fixed-endpoint paths.
    Sample,
    /// Minimize the discrete action.
    Minimize,
    /// Time-sliced propagator on a grid.
    Propagate,
    /// Characteristic-flow residuals of the ideal-gas models.
    Thermo,
    /// The mechanics/thermodynamics analogy table.
    Table,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::LoopInvariant => "loop-invariant",
            Command::Enumerate => "enumerate",
            Command::Ensemble => "ensemble",
            Command::SolveBeta => "solve-beta",
            Command::Sample => "sample",
            Command::Minimize => "minimize",
            Command::Propagate => "propagate",
            Command::Thermo => "thermo",
            Command::Table => "table",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("threads: {e}")))?;

    let text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?),
        None => None,
    };
    let text = text.as_deref();
    let mut out = OutputDir::create(&cli.out)?;
    let run = match cli.command {
        Command::Integrate => commands::integrate,
        Command::LoopInvariant => commands::loop_invariant,
        Command::Enumerate => commands::enumerate,
        Command::Ensemble => commands::ensemble,
        Command::SolveBeta => commands::solve_beta_cmd,
        Command::Sample => commands::sample,
        Command::Minimize => commands::minimize,
        Command::Propagate => commands::propagate,
        Command::Thermo => commands::thermo,
        Command::Table => commands::table,
    };
    let info = run(text, cli.seed, &mut out)?;

    let manifest = Manifest {
        command: cli.command.name().to_string(),
        config: info.config,
        seed: info.seed,
        threads: rayon::current_num_threads(),
        versions: versions(),
        outputs: out.written().to_vec(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    out.write_json("manifest.json", &manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
