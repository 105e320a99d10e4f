use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_traits::ToPrimitive;
use tpn::callcenter::{reduced_system, simulate_reduced};
use tpn::dynamics::{self, throughput_estimate, Columns, Mode, Recording, SimulationConfig, SimulationOutput};
use tpn::model::{self, LoadError};
use tpn::rational::{DisplayRational, Rational};
use tpn::solver::{build_system, solve_all, write_solutions_csv};

use crate::error::CliError;
use crate::model::{default_delta, default_reduced_delta, rational_arg, Model, ModelArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Stochastic,
    Fluid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Stochastic => Mode::Stochastic,
            ModeArg::Fluid => Mode::Fluid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ColumnsArg {
    Transitions,
    Places,
    Both,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "fluid")]
    pub mode: ModeArg,
    /// Number of δ-steps.
    #[arg(long, default_value_t = 1000)]
    pub horizon: u64,
    /// Routing seed (stochastic mode).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time step; defaults to 1 for integer holding times, the grid step
    /// otherwise.
    #[arg(long, value_parser = rational_arg)]
    pub delta: Option<Rational>,
    /// Trajectory CSV; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep every n-th step (the last one is always kept).
    #[arg(long, default_value_t = 1)]
    pub every: u64,
    #[arg(long, value_enum, default_value = "transitions")]
    pub columns: ColumnsArg,
    /// Call-center models in fluid mode: run the three-counter reduction
    /// instead of the full net.
    #[arg(long)]
    pub reduced: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Solution CSV; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Call-center models: solve the full net instead of the reduced
    /// three-unknown system.
    #[arg(long)]
    pub full_net: bool,
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn validate(path: &Path) -> Result<(), CliError> {
    match model::load(path) {
        Ok(net) => {
            print!("{}", net.report());
            println!("grid step: {}", DisplayRational(&net.grid_step()));
            Ok(())
        }
        Err(LoadError::Invalid(errors)) => {
            for e in &errors.0 {
                eprintln!("{e}");
            }
            Err(CliError::Domain(format!("{} validation error(s)", errors.0.len())))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let recording = Recording::Every(args.every.max(1));
    let columns = match args.columns {
        ColumnsArg::Transitions => Columns::Transitions,
        ColumnsArg::Places => Columns::Places,
        ColumnsArg::Both => Columns::Both,
    };
    let output = if args.reduced {
        let Model::CallCenter(params) = &model else {
            return Err(CliError::Usage("--reduced only applies to the call-center models".into()));
        };
        if args.mode != ModeArg::Fluid {
            return Err(CliError::Usage("--reduced needs --mode fluid".into()));
        }
        let delta = args.delta.clone().unwrap_or_else(|| default_reduced_delta(params));
        SimulationOutput::Fluid(simulate_reduced(params, &delta, args.horizon, &recording)?)
    } else {
        let net = model.net()?;
        let delta = args.delta.clone().unwrap_or_else(|| default_delta(&net));
        let config = SimulationConfig::new(args.mode.into(), delta, args.horizon)
            .seed(args.seed)
            .recording(recording);
        dynamics::simulate(&net, &config)?
    };
    let mut out = open_output(args.output.as_deref())?;
    output.write_csv(&mut out, &columns, true)?;
    out.flush()?;

    let traj = output.to_rational();
    if args.horizon > 0 {
        eprintln!("throughputs at t = {}:", DisplayRational(&(Rational::from_integer(args.horizon.into()) * &traj.delta)));
        for (q, id) in traj.transition_ids.iter().enumerate() {
            let rate = throughput_estimate(&traj, q)?;
            eprintln!("  {id}: {}", to_f64(&rate));
        }
    }
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let sys = match &model {
        Model::CallCenter(params) if !args.full_net => reduced_system(params),
        Model::File(_) if args.full_net => {
            return Err(CliError::Usage("--full-net only applies to the call-center models".into()))
        }
        _ => build_system(&model.net()?),
    };
    let report = solve_all(&sys);
    for (index, nullity) in &report.degenerate {
        eprintln!("warning: selection {index} is degenerate (throughputs not determined, nullity {nullity})");
    }
    eprintln!(
        "{} solution(s) from {} selection(s), {} infeasible, {} degenerate",
        report.solutions.len(),
        report.selection_count,
        report.infeasible,
        report.degenerate.len()
    );
    let mut out = open_output(args.output.as_deref())?;
    write_solutions_csv(&sys, &report.solutions, &mut out)?;
    out.flush()?;
    Ok(())
}
