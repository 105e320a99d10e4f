//! `tpn`: validate, simulate and solve timed Petri nets; sweep and compare
//! the call-center case study.

mod commands;
mod error;
mod model;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{SimulateArgs, SolveArgs};
use crate::sweep::{CompareArgs, SweepArgs};

#[derive(Parser)]
#[command(name = "tpn", version, about = "Throughput analysis of timed Petri nets with free-choice and priority routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a net file and print the place and transition classification.
    Validate {
        file: PathBuf,
    },
    /// Run the counter dynamics and write the trajectory.
    ///
    /// CSV columns: `t` (time kδ for k = 1..horizon) followed by one column
    /// per transition counter (or place counter, see --columns).
    Simulate(SimulateArgs),
    /// Enumerate the stationary regimes of a model.
    ///
    /// CSV columns: `solution_id,unknown_id,rho,u`, one row per unknown of
    /// each solution; `rho` and `u` are exact rationals.
    Solve(SolveArgs),
    /// Sweep the level-2 operator count of the call center.
    ///
    /// CSV columns: `n2,n2_over_n1,phase,transition,source,seed,rho,throughput,relative_error`.
    /// `source` is analytic, fluid, stochastic or stochastic_mean; `rho` is
    /// exact, `throughput` decimal, `relative_error` empty when rho is zero.
    /// The optional series file has
    /// `n2,source,seed,transition,t,throughput,relative_error`, sampled
    /// log-uniformly in t.
    Sweep(SweepArgs),
    /// Compare one simulation against the stationary prediction over time.
    ///
    /// CSV columns: `t,transition,rho,throughput,relative_error`, sampled
    /// log-uniformly in t.
    Compare(CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => commands::validate(&file),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Solve(args) => commands::solve(&args),
        Command::Sweep(args) => sweep::sweep(&args),
        Command::Compare(args) => sweep::compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
