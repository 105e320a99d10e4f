use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use tpn::callcenter::{build_full_net, phase_table, simulate_reduced, CallCenterParams, PhaseTable};
use tpn::dynamics::{simulate_fluid, simulate_stochastic, Recording, Trajectory};
use tpn::rational::{format_rational, parse_rational, Rational};
use tpn::solver::{build_system, solve_all};

use crate::commands::{open_output, to_f64, ModeArg};
use crate::error::CliError;
use crate::model::{default_delta, default_reduced_delta, rational_arg, Model, ModelArgs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range {
    pub start: Rational,
    pub stop: Rational,
    pub step: Rational,
}

impl Range {
    pub fn points(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut v = self.start.clone();
        while v <= self.stop {
            out.push(v.clone());
            v += &self.step;
        }
        out
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err("expected start:stop:step".into());
        };
        let parse = |t: &str| parse_rational(t).map_err(|e| e.to_string());
        let range = Range {
            start: parse(a)?,
            stop: parse(b)?,
            step: parse(c)?,
        };
        if !range.step.is_positive() {
            return Err("step must be positive".into());
        }
        if range.start > range.stop {
            return Err("start must not exceed stop".into());
        }
        Ok(range)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Analytic,
    Fluid,
    Stochastic,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Level-2 operator counts as start:stop:step.
    #[arg(long, default_value = "0:12:1/4")]
    pub n2_range: Range,
    /// Comma-separated list of analytic, fluid, stochastic.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "analytic")]
    pub mode: Vec<SweepMode>,
    /// Number of δ-steps per simulation.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    /// Comma-separated routing seeds for the stochastic runs.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    /// Time step of the fluid runs on the reduced dynamics. Stochastic runs
    /// use the full net at its grid step.
    #[arg(long, value_parser = rational_arg)]
    pub delta: Option<Rational>,
    /// Parallel sweep points; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comparison CSV; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Convergence series CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Series samples per decade of t.
    #[arg(long, default_value_t = 10)]
    pub per_decade: u32,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "fluid")]
    pub mode: ModeArg,
    /// Number of δ-steps.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = rational_arg)]
    pub delta: Option<Rational>,
    /// Call-center models in fluid mode: use the three-counter reduction.
    #[arg(long)]
    pub reduced: bool,
    /// Comparison series CSV; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub per_decade: u32,
}

/// Steps `1..=horizon` spaced evenly in `log t`, with the horizon itself.
pub fn log_uniform_steps(horizon: u64, per_decade: u32) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    let per_decade = per_decade.max(1) as f64;
    let mut steps = Vec::new();
    let mut i = 0u32;
    loop {
        let k = 10f64.powf(i as f64 / per_decade).round() as u64;
        if k >= horizon {
            break;
        }
        if steps.last() != Some(&k) {
            steps.push(k);
        }
        i += 1;
    }
    steps.push(horizon);
    steps
}

fn relative_error(estimate: &Rational, rho: &Rational) -> Option<Rational> {
    (!rho.is_zero()).then(|| ((estimate - rho) / rho).abs())
}

fn error_cell(err: Option<Rational>) -> String {
    err.map(|e| to_f64(&e).to_string()).unwrap_or_default()
}

/// One simulated run: throughput estimates of the tracked transitions at
/// each sampled step.
struct Run {
    source: &'static str,
    seed: Option<u64>,
    samples: Vec<(Rational, Vec<Rational>)>,
}

fn sample(traj: &Trajectory<Rational>, ids: &[&str]) -> Result<Vec<(Rational, Vec<Rational>)>, CliError> {
    let cols: Vec<usize> = ids
        .iter()
        .map(|id| {
            traj.transition_index(id)
                .ok_or_else(|| CliError::Domain(format!("transition {id} not in trajectory")))
        })
        .collect::<Result<_, _>>()?;
    Ok(traj
        .steps
        .iter()
        .zip(&traj.z)
        .filter(|(k, _)| **k > 0)
        .map(|(&k, row)| {
            let t = Rational::from_integer(k.into()) * &traj.delta;
            let rates = cols.iter().map(|&q| &row[q] / &t).collect();
            (t, rates)
        })
        .collect())
}

const COUNTERS: [&str; 3] = ["q1", "q5", "q6"];

struct PointResult {
    n2: Rational,
    table: PhaseTable,
    runs: Vec<Run>,
}

fn run_point(args: &SweepArgs, params: &CallCenterParams, steps: &Recording) -> Result<PointResult, CliError> {
    let table = phase_table(params)?;
    let mut runs = Vec::new();
    if args.mode.contains(&SweepMode::Fluid) {
        let delta = args.delta.clone().unwrap_or_else(|| default_reduced_delta(params));
        let traj = simulate_reduced(params, &delta, args.horizon, steps)?;
        runs.push(Run {
            source: "fluid",
            seed: None,
            samples: sample(&traj, &COUNTERS)?,
        });
    }
    if args.mode.contains(&SweepMode::Stochastic) {
        let net = build_full_net(params)?;
        let delta = net.grid_step();
        for &seed in &args.seed {
            let traj = simulate_stochastic(&net, &delta, args.horizon, seed, steps)?.to_rational();
            runs.push(Run {
                source: "stochastic",
                seed: Some(seed),
                samples: sample(&traj, &COUNTERS)?,
            });
        }
    }
    Ok(PointResult {
        n2: params.n2.clone(),
        table,
        runs,
    })
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let Model::CallCenter(base) = args.model.resolve()? else {
        return Err(CliError::Usage("sweep needs a call-center model".into()));
    };
    if args.model.n2.is_some() {
        return Err(CliError::Usage("use --n2-range with sweep, not --n2".into()));
    }
    let points = args.n2_range.points();
    let series_steps = log_uniform_steps(args.horizon, args.per_decade);
    let recording = if args.series.is_some() {
        Recording::At(series_steps)
    } else {
        Recording::Final
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        pool = pool.num_threads(w.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|n2| run_point(args, &base.with_operators(base.n1.clone(), n2.clone()), &recording))
            .collect::<Result<_, _>>()
    })?;

    let mut out = csv::Writer::from_writer(open_output(args.output.as_deref())?);
    out.write_record([
        "n2",
        "n2_over_n1",
        "phase",
        "transition",
        "source",
        "seed",
        "rho",
        "throughput",
        "relative_error",
    ])
    .map_err(csv_error)?;
    for point in &results {
        let t = &point.table;
        let mut write = |id: &str, rho: &Rational, source: &str, seed: String, estimate: &Rational| {
            out.write_record([
                format_rational(&point.n2),
                format_rational(&t.ratio),
                t.phase.to_string(),
                id.to_string(),
                source.to_string(),
                seed,
                format_rational(rho),
                to_f64(estimate).to_string(),
                error_cell(relative_error(estimate, rho)),
            ])
        };
        for (i, id) in COUNTERS.iter().enumerate() {
            let rho = t.rhos()[i];
            if args.mode.contains(&SweepMode::Analytic) {
                write(id, rho, "analytic", String::new(), rho).map_err(csv_error)?;
            }
            for run in &point.runs {
                let (_, last) = run.samples.last().ok_or_else(|| CliError::Usage("horizon must be positive".into()))?;
                let seed = run.seed.map(|s| s.to_string()).unwrap_or_default();
                write(id, rho, run.source, seed, &last[i]).map_err(csv_error)?;
            }
            let stochastic: Vec<&Run> = point.runs.iter().filter(|r| r.source == "stochastic").collect();
            if stochastic.len() > 1 {
                let sum: Rational = stochastic.iter().map(|r| r.samples.last().unwrap().1[i].clone()).sum();
                let mean = sum / Rational::from_integer(stochastic.len().into());
                write(id, rho, "stochastic_mean", String::new(), &mean).map_err(csv_error)?;
            }
        }
    }
    out.flush()?;

    if let Some(path) = &args.series {
        let mut series = csv::Writer::from_writer(open_output(Some(path))?);
        series
            .write_record(["n2", "source", "seed", "transition", "t", "throughput", "relative_error"])
            .map_err(csv_error)?;
        for point in &results {
            for run in &point.runs {
                for (t, rates) in &run.samples {
                    for (i, id) in COUNTERS.iter().enumerate() {
                        series
                            .write_record([
                                format_rational(&point.n2),
                                run.source.to_string(),
                                run.seed.map(|s| s.to_string()).unwrap_or_default(),
                                id.to_string(),
                                format_rational(t),
                                to_f64(&rates[i]).to_string(),
                                error_cell(relative_error(&rates[i], point.table.rhos()[i])),
                            ])
                            .map_err(csv_error)?;
                    }
                }
            }
        }
        series.flush()?;
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.into())
}

/// Stationary throughputs to compare against: the closed form for the
/// call center, the unique solver regime for other nets.
fn predictions(model: &Model) -> Result<Vec<(String, Rational)>, CliError> {
    match model {
        Model::CallCenter(params) => {
            let t = phase_table(params)?;
            Ok(COUNTERS.iter().zip(t.rhos()).map(|(id, r)| (id.to_string(), r.clone())).collect())
        }
        Model::File(net) => {
            let sys = build_system(net);
            let report = solve_all(&sys);
            let transitions: Vec<&str> = net.transitions().iter().map(|q| q.id.0.as_str()).collect();
            let mut distinct: Vec<Vec<(String, Rational)>> = Vec::new();
            for s in &report.solutions {
                let rhos: Vec<(String, Rational)> = transitions
                    .iter()
                    .map(|id| (id.to_string(), s.rho(&sys, id).cloned().unwrap_or_default()))
                    .collect();
                if !distinct.contains(&rhos) {
                    distinct.push(rhos);
                }
            }
            match distinct.len() {
                1 => Ok(distinct.pop().unwrap()),
                0 => Err(CliError::Domain("the net has no stationary regime to compare against".into())),
                n => Err(CliError::Domain(format!("{n} stationary regimes with different throughputs"))),
            }
        }
    }
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let expected = predictions(&model)?;
    let recording = Recording::At(log_uniform_steps(args.horizon, args.per_decade));
    let traj = match (&model, args.mode) {
        (Model::CallCenter(params), ModeArg::Fluid) if args.reduced => {
            let delta = args.delta.clone().unwrap_or_else(|| default_reduced_delta(params));
            simulate_reduced(params, &delta, args.horizon, &recording)?
        }
        _ if args.reduced => {
            return Err(CliError::Usage("--reduced needs a call-center model and --mode fluid".into()))
        }
        (_, mode) => {
            let net = model.net()?;
            let delta = args.delta.clone().unwrap_or_else(|| default_delta(&net));
            match mode {
                ModeArg::Fluid => simulate_fluid(&net, &delta, args.horizon, &recording)?,
                ModeArg::Stochastic => {
                    simulate_stochastic(&net, &delta, args.horizon, args.seed, &recording)?.to_rational()
                }
            }
        }
    };
    let ids: Vec<&str> = expected.iter().map(|(id, _)| id.as_str()).collect();
    let samples = sample(&traj, &ids)?;

    let mut out = csv::Writer::from_writer(open_output(args.output.as_deref())?);
    out.write_record(["t", "transition", "rho", "throughput", "relative_error"])
        .map_err(csv_error)?;
    for (t, rates) in &samples {
        for ((id, rho), rate) in expected.iter().zip(rates) {
            out.write_record([
                format_rational(t),
                id.clone(),
                format_rational(rho),
                to_f64(rate).to_string(),
                error_cell(relative_error(rate, rho)),
            ])
            .map_err(csv_error)?;
        }
    }
    out.flush()?;

    if let Some((t, rates)) = samples.last() {
        eprintln!("at t = {}:", format_rational(t));
        for ((id, rho), rate) in expected.iter().zip(rates) {
            let err = relative_error(rate, rho).map(|e| format!("{:.3e}", to_f64(&e))).unwrap_or_else(|| "-".into());
            eprintln!("  {id}: rho = {}, z/t = {}, relative error = {err}", format_rational(rho), to_f64(rate));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tpn::rational::{int, ratio};

    #[test]
    fn range_parsing() {
        let r: Range = "0:12:1/4".parse().unwrap();
        assert_eq!(r.points().len(), 49);
        assert_eq!(r.points()[1], ratio(1, 4));
        assert!("3:1:1".parse::<Range>().is_err());
        assert!("0:1:0".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
        let single: Range = "5:5:1".parse().unwrap();
        assert_eq!(single.points(), vec![int(5)]);
    }

    #[test]
    fn log_steps() {
        assert!(log_uniform_steps(0, 10).is_empty());
        assert_eq!(log_uniform_steps(1, 10), vec![1]);
        let s = log_uniform_steps(1000, 2);
        assert_eq!(s, vec![1, 3, 10, 32, 100, 316, 1000]);
    }
}
