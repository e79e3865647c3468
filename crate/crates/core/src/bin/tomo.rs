use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tomo_rbpg::cli::{self, GlobalOptions, SolveArgs};

/// Tomographic SAR inversion with randomized blockwise proximal gradient.
#[derive(Parser)]
#[command(name = "tomo", version)]
struct Args {
    /// Seed overriding the one in the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Command configuration file (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a pixel stack from a scenario file
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Estimate scatterers in every pixel of a stack
    Solve {
        stack: PathBuf,
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write a point-cloud CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Detection-rate curves (needs --config)
    Montecarlo {
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solver timing report
    Bench {
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = GlobalOptions { seed: args.seed, workers: args.workers, config: args.config };
    let result = match args.command {
        Command::Simulate { scenario, out } => cli::cmd_simulate(&scenario, &out, &opts).map(|_| ()),
        Command::Solve { stack, geometry, grid, out, csv } => {
            cli::cmd_solve(&SolveArgs { stack, geometry, grid, out, csv }, &opts).map(|_| ())
        }
        Command::Montecarlo { out } => cli::cmd_montecarlo(&out, &opts).map(|_| ()),
        Command::Bench { out } => cli::cmd_bench(&out, &opts).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tomo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
