//! δ-discretized counter dynamics.
//!
//! `x_p(t)` counts tokens that entered place `p` up to time `t` (initial
//! marking included), `z_q(t)` counts firings of `q`. Two modes share one
//! engine: stochastic (integer counters, per-token random routing) and fluid
//! (exact rationals, proportional routing).

mod arith;
mod engine;
pub mod equations;
mod routing;

use std::io::{self, Write};

use crate::model::{PetriNet, PlaceId, TransitionId};
use crate::rational::{DisplayRational, Rational};

pub use arith::{CounterArith, FluidArith, FluidValue, StochasticArith};
pub use engine::Simulator;
pub use routing::{Categorical, RoutingStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stochastic,
    Fluid,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stochastic" => Ok(Mode::Stochastic),
            "fluid" => Ok(Mode::Fluid),
            other => Err(format!("unknown mode `{other}` (expected stochastic or fluid)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Stochastic => "stochastic",
            Mode::Fluid => "fluid",
        })
    }
}

/// Which steps a simulation keeps in its trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recording {
    /// Every `n`-th step, starting at 0, plus the last one.
    Every(u64),
    /// The listed steps (those beyond the horizon are ignored) plus the last.
    At(Vec<u64>),
    /// Only the last step.
    Final,
}

impl Recording {
    pub(crate) fn keeps(&self, k: u64, horizon: u64) -> bool {
        k == horizon
            || match self {
                Recording::Every(n) => k % (*n).max(1) == 0,
                Recording::At(steps) => steps.binary_search(&k).is_ok(),
                Recording::Final => false,
            }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub mode: Mode,
    pub delta: Rational,
    /// Last step index; the run computes steps `0..=horizon`.
    pub horizon: u64,
    /// Used in stochastic mode only.
    pub seed: u64,
    pub recording: Recording,
}

impl SimulationConfig {
    pub fn new(mode: Mode, delta: Rational, horizon: u64) -> Self {
        SimulationConfig {
            mode,
            delta,
            horizon,
            seed: 0,
            recording: Recording::Every(1),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("time step must be positive")]
    NonPositiveStep,
    #[error("holding time of place {place} is not a positive multiple of δ = {}", DisplayRational(.delta))]
    StepMismatch { place: PlaceId, delta: Rational },
    #[error("place {0} has a fractional initial marking; token-level modes need integers")]
    NonIntegralMarking(PlaceId),
    #[error("throughput needs a horizon of at least one step")]
    EmptyHorizon,
    #[error("unknown counter `{0}`")]
    UnknownCounter(String),
}

/// Recorded counter values. Row `i` holds the values at step `steps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<V> {
    pub delta: Rational,
    pub horizon: u64,
    pub place_ids: Vec<PlaceId>,
    pub transition_ids: Vec<TransitionId>,
    pub steps: Vec<u64>,
    pub x: Vec<Vec<V>>,
    pub z: Vec<Vec<V>>,
}

impl<V: Clone> Trajectory<V> {
    fn empty(net: &PetriNet, delta: &Rational, horizon: u64) -> Self {
        Trajectory {
            delta: delta.clone(),
            horizon,
            place_ids: net.places().iter().map(|p| p.id.clone()).collect(),
            transition_ids: net.transitions().iter().map(|q| q.id.clone()).collect(),
            steps: Vec::new(),
            x: Vec::new(),
            z: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_ids.iter().position(|p| p.0 == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transition_ids.iter().position(|q| q.0 == id)
    }

    pub fn final_x(&self) -> &[V] {
        self.x.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_z(&self) -> &[V] {
        self.z.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Row index of step `k`, if recorded.
    pub fn row_of(&self, k: u64) -> Option<usize> {
        self.steps.binary_search(&k).ok()
    }

    pub fn z_series(&self, q: usize) -> impl Iterator<Item = &V> + '_ {
        self.z.iter().map(move |row| &row[q])
    }

    pub fn x_series(&self, p: usize) -> impl Iterator<Item = &V> + '_ {
        self.x.iter().map(move |row| &row[p])
    }

    pub fn map<W>(&self, f: impl Fn(&V) -> W) -> Trajectory<W> {
        Trajectory {
            delta: self.delta.clone(),
            horizon: self.horizon,
            place_ids: self.place_ids.clone(),
            transition_ids: self.transition_ids.clone(),
            steps: self.steps.clone(),
            x: self.x.iter().map(|r| r.iter().map(&f).collect()).collect(),
            z: self.z.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }
}

impl Trajectory<i64> {
    pub fn to_rational(&self) -> Trajectory<Rational> {
        self.map(|v| Rational::from_integer((*v).into()))
    }
}

/// Values that can be written into trajectory CSV cells.
pub trait CsvCell {
    fn cell(&self) -> String;
}

impl CsvCell for i64 {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl CsvCell for Rational {
    fn cell(&self) -> String {
        DisplayRational(self).to_string()
    }
}

/// Selects the columns of a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Columns {
    Transitions,
    Places,
    Both,
}

impl<V: CsvCell + Clone> Trajectory<V> {
    /// Writes `t,<ids...>` followed by one row per recorded step with
    /// `1 ≤ k`, `t = kδ`. The step-0 row is omitted when `skip_zero` is set.
    pub fn write_csv<W: io::Write>(&self, out: W, columns: &Columns, skip_zero: bool) -> io::Result<()> {
        let mut out = io::BufWriter::new(out);
        let mut header = vec!["t".to_owned()];
        if matches!(columns, Columns::Places | Columns::Both) {
            header.extend(self.place_ids.iter().map(|p| p.0.clone()));
        }
        if matches!(columns, Columns::Transitions | Columns::Both) {
            header.extend(self.transition_ids.iter().map(|q| q.0.clone()));
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, &k) in self.steps.iter().enumerate() {
            if skip_zero && k == 0 {
                continue;
            }
            let t = Rational::from_integer(k.into()) * &self.delta;
            let mut row = vec![DisplayRational(&t).to_string()];
            if matches!(columns, Columns::Places | Columns::Both) {
                row.extend(self.x[i].iter().map(CsvCell::cell));
            }
            if matches!(columns, Columns::Transitions | Columns::Both) {
                row.extend(self.z[i].iter().map(CsvCell::cell));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulationOutput {
    Stochastic(Trajectory<i64>),
    Fluid(Trajectory<Rational>),
}

impl SimulationOutput {
    pub fn to_rational(&self) -> Trajectory<Rational> {
        match self {
            SimulationOutput::Stochastic(t) => t.to_rational(),
            SimulationOutput::Fluid(t) => t.clone(),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W, columns: &Columns, skip_zero: bool) -> io::Result<()> {
        match self {
            SimulationOutput::Stochastic(t) => t.write_csv(out, columns, skip_zero),
            SimulationOutput::Fluid(t) => t.write_csv(out, columns, skip_zero),
        }
    }
}

/// Arithmetic context for a fluid run of `net`: the base covers every
/// probability and marking denominator.
pub fn fluid_arith(net: &PetriNet) -> FluidArith {
    fluid_arith_with(net, std::iter::empty())
}

/// Same as [`fluid_arith`], also covering `extra` denominators (for
/// injected histories).
pub fn fluid_arith_with(net: &PetriNet, extra: impl IntoIterator<Item = num_bigint::BigInt>) -> FluidArith {
    let mut denominators: Vec<num_bigint::BigInt> = extra.into_iter().collect();
    for p in net.places() {
        denominators.push(p.initial_marking.denom().clone());
    }
    for probs in net.description().routing.values() {
        denominators.extend(probs.values().map(|r| r.denom().clone()));
    }
    FluidArith::new(denominators.iter())
}

pub fn fluid_simulator<'n>(net: &'n PetriNet, delta: &Rational) -> Result<Simulator<'n, FluidArith>, DynamicsError> {
    Simulator::new(net, delta, fluid_arith(net))
}

pub fn stochastic_simulator<'n>(
    net: &'n PetriNet,
    delta: &Rational,
    seed: u64,
) -> Result<Simulator<'n, StochasticArith>, DynamicsError> {
    if let Some(p) = net.places().iter().find(|p| !p.initial_marking.is_integer()) {
        return Err(DynamicsError::NonIntegralMarking(p.id.clone()));
    }
    Simulator::new(net, delta, StochasticArith::new(RoutingStream::new(seed)))
}

/// Runs `sim` through step `horizon`, recording the requested rows.
pub fn run<A: CounterArith>(
    sim: &mut Simulator<'_, A>,
    horizon: u64,
    recording: &Recording,
) -> Trajectory<A::Value> {
    let mut traj = Trajectory::empty(sim.net(), sim.delta(), horizon);
    let (places, transitions) = (sim.net().place_count(), sim.net().transition_count());
    loop {
        let k = sim.step() as u64;
        if recording.keeps(k, horizon) {
            traj.steps.push(k);
            traj.x.push((0..places).map(|p| sim.x(p).clone()).collect());
            traj.z.push((0..transitions).map(|q| sim.z(q).clone()).collect());
        }
        if k >= horizon {
            return traj;
        }
    }
}

pub fn simulate_fluid(net: &PetriNet, delta: &Rational, horizon: u64, recording: &Recording) -> Result<Trajectory<Rational>, DynamicsError> {
    let mut sim = fluid_simulator(net, delta)?;
    let traj = run(&mut sim, horizon, recording);
    let arith = sim.arith();
    Ok(traj.map(|v| arith.to_rational(v)))
}

pub fn simulate_stochastic(
    net: &PetriNet,
    delta: &Rational,
    horizon: u64,
    seed: u64,
    recording: &Recording,
) -> Result<Trajectory<i64>, DynamicsError> {
    let mut sim = stochastic_simulator(net, delta, seed)?;
    Ok(run(&mut sim, horizon, recording))
}

pub fn simulate(net: &PetriNet, config: &SimulationConfig) -> Result<SimulationOutput, DynamicsError> {
    Ok(match config.mode {
        Mode::Fluid => SimulationOutput::Fluid(simulate_fluid(net, &config.delta, config.horizon, &config.recording)?),
        Mode::Stochastic => SimulationOutput::Stochastic(simulate_stochastic(
            net,
            &config.delta,
            config.horizon,
            config.seed,
            &config.recording,
        )?),
    })
}

/// `z_q[h] / (h δ)` at the last recorded step `h`.
pub fn throughput_estimate(traj: &Trajectory<Rational>, q: usize) -> Result<Rational, DynamicsError> {
    let (&h, row) = traj.steps.last().zip(traj.z.last()).ok_or(DynamicsError::EmptyHorizon)?;
    if h == 0 {
        return Err(DynamicsError::EmptyHorizon);
    }
    Ok(&row[q] / (Rational::from_integer(h.into()) * &traj.delta))
}

/// Running throughput `z_q[k] / (kδ)` at every recorded step `k ≥ 1`.
pub fn running_throughput(traj: &Trajectory<Rational>, q: usize) -> Vec<(u64, Rational)> {
    traj.steps
        .iter()
        .zip(&traj.z)
        .filter(|(k, _)| **k > 0)
        .map(|(&k, row)| (k, &row[q] / (Rational::from_integer(k.into()) * &traj.delta)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetDescription, PriorityTag};
    use crate::rational::{int, ratio};

    // p0 -> a -> p1 -> b -> p0, with a conflict at p1 (b or c, c -> p0)
    // unless `pi_b` is one.
    fn cycle_with_conflict(pi_b: Rational) -> PetriNet {
        let mut d = NetDescription::default();
        d.place("p0", int(1), int(2))
            .place("p1", int(2), int(0))
            .transition("a")
            .transition("b")
            .transition("c")
            .input("p0", "a")
            .output("a", "p1")
            .input("p1", "b")
            .output("b", "p0")
            .output("c", "p0");
        if pi_b != int(1) {
            d.input("p1", "c").route("p1", &[("b", pi_b.clone()), ("c", int(1) - pi_b)]);
        } else {
            d.place("idle", int(1), int(0)).input("idle", "c");
        }
        PetriNet::new(d).unwrap()
    }

    fn priority_net() -> PetriNet {
        let mut d = NetDescription::default();
        d.place("src", int(1), int(3))
            .place("pp", int(1), int(1))
            .place("hi_side", int(2), int(1))
            .transition("feed")
            .transition("hi")
            .transition("lo")
            .input("src", "feed")
            .output("feed", "src")
            .output("feed", "pp")
            .priority_input("pp", "hi", PriorityTag::High)
            .priority_input("pp", "lo", PriorityTag::Low)
            .input("hi_side", "hi")
            .output("hi", "hi_side");
        PetriNet::new(d).unwrap()
    }

    #[test]
    fn pre_history_and_first_step() {
        let net = cycle_with_conflict(int(1));
        let traj = simulate_fluid(&net, &int(1), 0, &Recording::Every(1)).unwrap();
        assert_eq!(traj.steps, vec![0]);
        // a fires on the initial marking of p0 at t = 0.
        assert_eq!(traj.z[0], vec![int(2), int(0), int(0)]);
        assert_eq!(traj.x[0][..2], [int(2), int(2)]);
    }

    #[test]
    fn fluid_routing_splits_proportionally() {
        let net = cycle_with_conflict(ratio(1, 4));
        let traj = simulate_fluid(&net, &int(1), 6, &Recording::Every(1)).unwrap();
        let row = traj.row_of(2).unwrap();
        assert_eq!(traj.z[row][1], ratio(1, 2));
        assert_eq!(traj.z[row][2], ratio(3, 2));
    }

    #[test]
    fn stochastic_equals_fluid_without_splitting() {
        let net = cycle_with_conflict(int(1));
        let fluid = simulate_fluid(&net, &int(1), 50, &Recording::Every(1)).unwrap();
        for seed in [0, 1, 99] {
            let st = simulate_stochastic(&net, &int(1), 50, seed, &Recording::Every(1)).unwrap();
            assert_eq!(st.to_rational(), fluid);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let net = cycle_with_conflict(ratio(1, 3));
        let a = simulate_stochastic(&net, &int(1), 200, 42, &Recording::Every(1)).unwrap();
        let b = simulate_stochastic(&net, &int(1), 200, 42, &Recording::Every(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn priority_pair_respects_order() {
        let net = priority_net();
        let traj = simulate_fluid(&net, &int(1), 10, &Recording::Every(1)).unwrap();
        let (hi, lo) = (traj.transition_index("hi").unwrap(), traj.transition_index("lo").unwrap());
        // hi is limited by its side place (one token, holding time 2).
        assert_eq!(traj.z[0][hi], int(1));
        assert_eq!(traj.z[0][lo], int(0));
        let last = traj.len() - 1;
        let pp = traj.place_index("pp").unwrap();
        assert!(&traj.z[last][hi] + &traj.z[last][lo] <= traj.x[last - 1][pp]);
    }

    #[test]
    fn recording_modes() {
        let net = cycle_with_conflict(int(1));
        let every = simulate_fluid(&net, &int(1), 10, &Recording::Every(4)).unwrap();
        assert_eq!(every.steps, vec![0, 4, 8, 10]);
        let at = simulate_fluid(&net, &int(1), 10, &Recording::At(vec![3, 7, 20])).unwrap();
        assert_eq!(at.steps, vec![3, 7, 10]);
        let fin = simulate_fluid(&net, &int(1), 10, &Recording::Final).unwrap();
        assert_eq!(fin.steps, vec![10]);
        assert_eq!(fin.final_z(), every.final_z());
    }

    #[test]
    fn throughput_of_zero_and_affine_counters() {
        let net = cycle_with_conflict(int(1));
        let traj = simulate_fluid(&net, &int(1), 30, &Recording::Final).unwrap();
        // No c firings at all.
        assert_eq!(throughput_estimate(&traj, 2).unwrap(), int(0));
        // Two tokens circulate over a cycle of length 3.
        let a = throughput_estimate(&traj, 0).unwrap();
        assert!((a - ratio(2, 3)).abs() < ratio(1, 10));
        let single = simulate_fluid(&net, &int(1), 0, &Recording::Final).unwrap();
        assert_eq!(throughput_estimate(&single, 0), Err(DynamicsError::EmptyHorizon));
    }

    #[test]
    fn rejects_incompatible_step() {
        let net = cycle_with_conflict(int(1));
        assert!(matches!(
            simulate_fluid(&net, &int(2), 3, &Recording::Final),
            Err(DynamicsError::StepMismatch { .. })
        ));
        assert_eq!(
            simulate_fluid(&net, &int(0), 3, &Recording::Final).unwrap_err(),
            DynamicsError::NonPositiveStep
        );
    }

    #[test]
    fn csv_layout() {
        let net = cycle_with_conflict(ratio(1, 2));
        let traj = simulate_fluid(&net, &ratio(1, 2), 4, &Recording::Every(2)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &Columns::Transitions, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,a,b,c");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[2].starts_with("2,"));
    }

    use num_traits::Signed;
}
