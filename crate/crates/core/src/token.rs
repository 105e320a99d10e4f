//! Token-level earliest-firing simulator on the grid `δℕ`.
//!
//! Tokens carry ages; a transition is fireable when every upstream place
//! holds a token at least as old as its holding time. Each step fires
//! transitions until none is fireable, then lets time elapse by `δ`. The
//! resulting counters are an independent oracle for the counter dynamics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::dynamics::{Categorical, DynamicsError, RoutingStream, Trajectory};
use crate::model::{PetriNet, TransitionId, TransitionKind};
use crate::rational::{steps_of, Rational};

/// Age of a token in steps of `δ`. Initial tokens are infinitely old.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenAge {
    Steps(u64),
    Infinite,
}

impl fmt::Display for TokenAge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenAge::Steps(k) => write!(f, "{k}δ"),
            TokenAge::Infinite => f.write_str("∞"),
        }
    }
}

// Arrival step of a token; initial tokens arrive "before time".
const INITIAL: i64 = i64::MIN;

/// Multiset of tokens per place, stored by arrival step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenState {
    now: i64,
    tokens: Vec<BTreeMap<i64, u64>>,
}

impl TokenState {
    pub fn initial(net: &PetriNet) -> Result<Self, DynamicsError> {
        let mut tokens = Vec::with_capacity(net.place_count());
        for p in net.places() {
            let m = &p.initial_marking;
            if !m.is_integer() {
                return Err(DynamicsError::NonIntegralMarking(p.id.clone()));
            }
            let count = u64::try_from(m.to_integer()).map_err(|_| DynamicsError::NonIntegralMarking(p.id.clone()))?;
            let mut bag = BTreeMap::new();
            if count > 0 {
                bag.insert(INITIAL, count);
            }
            tokens.push(bag);
        }
        Ok(TokenState { now: 0, tokens })
    }

    /// Current step index.
    pub fn now(&self) -> u64 {
        self.now as u64
    }

    pub fn token_count(&self, p: usize) -> u64 {
        self.tokens[p].values().sum()
    }

    /// Ages of the tokens in `p`, oldest first.
    pub fn ages(&self, p: usize) -> Vec<TokenAge> {
        let mut out = Vec::new();
        for (&arrival, &n) in &self.tokens[p] {
            let age = if arrival == INITIAL {
                TokenAge::Infinite
            } else {
                TokenAge::Steps((self.now - arrival) as u64)
            };
            out.extend(std::iter::repeat(age).take(n as usize));
        }
        out
    }

    /// Number of tokens of `p` whose age is at least `lag` steps.
    fn mature(&self, p: usize, lag: u64) -> u64 {
        let cutoff = self.now - lag as i64;
        self.tokens[p].range(..=cutoff).map(|(_, n)| n).sum()
    }

    fn take_oldest(&mut self, p: usize) {
        let bag = &mut self.tokens[p];
        let (&arrival, n) = bag.iter_mut().next().expect("a mature token");
        *n -= 1;
        if *n == 0 {
            bag.remove(&arrival);
        }
    }

    fn put(&mut self, p: usize) {
        *self.tokens[p].entry(self.now).or_insert(0) += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringEvent {
    pub time: Rational,
    pub transition: TransitionId,
}

pub struct TokenSimulator<'n> {
    net: &'n PetriNet,
    delta: Rational,
    lag: Vec<u64>,
    state: TokenState,
    stream: RoutingStream,
    conflicts: Vec<(usize, Vec<usize>, Categorical)>,
    routed: Vec<u64>,
    order: Vec<usize>,
    suppressed: HashSet<(u64, usize)>,
    x: Vec<i64>,
    z: Vec<i64>,
    log: Option<Vec<FiringEvent>>,
}

impl<'n> TokenSimulator<'n> {
    pub fn new(net: &'n PetriNet, delta: &Rational, stream: RoutingStream) -> Result<Self, DynamicsError> {
        use num_traits::Signed;
        if !delta.is_positive() {
            return Err(DynamicsError::NonPositiveStep);
        }
        let mut lag = Vec::with_capacity(net.place_count());
        for p in net.places() {
            match steps_of(&p.holding_time, delta) {
                Some(k) if k > 0 => lag.push(k),
                _ => {
                    return Err(DynamicsError::StepMismatch {
                        place: p.id.clone(),
                        delta: delta.clone(),
                    })
                }
            }
        }
        let state = TokenState::initial(net)?;
        let mut conflicts = Vec::new();
        for p in 0..net.place_count() {
            let mut outs = Vec::new();
            let mut probs = Vec::new();
            for q in 0..net.transition_count() {
                if let TransitionKind::Routed { place, prob } = net.transition_kind(q) {
                    if *place == p {
                        outs.push(q);
                        probs.push(prob.clone());
                    }
                }
            }
            if !outs.is_empty() {
                conflicts.push((p, outs, Categorical::new(&probs)));
            }
        }
        let x = (0..net.place_count()).map(|p| state.token_count(p) as i64).collect();
        Ok(TokenSimulator {
            net,
            delta: delta.clone(),
            lag,
            state,
            stream,
            conflicts,
            routed: vec![0; net.place_count()],
            order: (0..net.transition_count()).collect(),
            suppressed: HashSet::new(),
            x,
            z: vec![0; net.transition_count()],
            log: None,
        })
    }

    /// Order in which transitions are tried within a step; any permutation
    /// of the transition indices.
    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert!(sorted.iter().copied().eq(0..self.net.transition_count()), "order must be a permutation");
        self.order = order;
        self
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// Forbids `q` from firing at step `k`, which departs from the earliest
    /// behavior. Routed transitions cannot be suppressed.
    pub fn suppress(&mut self, k: u64, q: usize) {
        assert!(
            !matches!(self.net.transition_kind(q), TransitionKind::Routed { .. }),
            "routed transitions fire as soon as their token matures"
        );
        self.suppressed.insert((k, q));
    }

    pub fn state(&self) -> &TokenState {
        &self.state
    }

    pub fn log(&self) -> Option<&[FiringEvent]> {
        self.log.as_deref()
    }

    /// Counters after the last completed step.
    pub fn x(&self) -> &[i64] {
        &self.x
    }

    pub fn z(&self) -> &[i64] {
        &self.z
    }

    pub fn fireable(&self, q: usize) -> bool {
        self.net
            .transition_inputs(q)
            .iter()
            .all(|&p| self.state.mature(p, self.lag[p]) > 0)
    }

    fn allowed(&self, q: usize) -> bool {
        let k = self.state.now();
        if self.suppressed.contains(&(k, q)) || !self.fireable(q) {
            return false;
        }
        match self.net.transition_kind(q) {
            TransitionKind::PriorityLow { sibling, .. } => {
                self.suppressed.contains(&(k, *sibling)) || !self.fireable(*sibling)
            }
            _ => true,
        }
    }

    fn fire(&mut self, q: usize) {
        for &p in self.net.transition_inputs(q) {
            self.state.take_oldest(p);
        }
        for &p in self.net.transition_outputs(q) {
            self.state.put(p);
            self.x[p] += 1;
        }
        self.z[q] += 1;
        if let Some(log) = &mut self.log {
            log.push(FiringEvent {
                time: Rational::from_integer(self.state.now.into()) * &self.delta,
                transition: self.net.transitions()[q].id.clone(),
            });
        }
    }

    /// Whether some transition could still fire at the current instant.
    pub fn saturated(&self) -> bool {
        !(0..self.net.transition_count()).any(|q| self.allowed(q))
    }

    /// Fires until nothing is fireable, then returns the completed step
    /// index. Time elapses by `δ` at the start of the following call.
    pub fn step(&mut self) -> u64 {
        loop {
            let mut fired = false;
            for i in 0..self.conflicts.len() {
                let p = self.conflicts[i].0;
                while self.state.mature(p, self.lag[p]) > 0 {
                    let ordinal = self.routed[p];
                    self.routed[p] += 1;
                    let choice = self.stream.draw(p, ordinal, &self.conflicts[i].2);
                    let q = self.conflicts[i].1[choice];
                    self.fire(q);
                    fired = true;
                }
            }
            for i in 0..self.order.len() {
                let q = self.order[i];
                if matches!(self.net.transition_kind(q), TransitionKind::Routed { .. }) {
                    continue;
                }
                while self.allowed(q) {
                    self.fire(q);
                    fired = true;
                }
            }
            if !fired {
                break;
            }
        }
        let k = self.state.now();
        self.state.now += 1;
        k
    }

    /// Peeks at the current step before it is completed (time has already
    /// elapsed past the previous one).
    fn rewind_view(&mut self) {
        self.state.now -= 1;
    }

    fn forward_view(&mut self) {
        self.state.now += 1;
    }

    /// Same as [`saturated`](Self::saturated) but for the step just
    /// completed by [`step`](Self::step).
    pub fn was_saturated(&mut self) -> bool {
        self.rewind_view();
        let s = self.saturated();
        self.forward_view();
        s
    }

    /// Ages at the step just completed.
    pub fn ages_after_step(&mut self, p: usize) -> Vec<TokenAge> {
        self.rewind_view();
        let a = self.state.ages(p);
        self.forward_view();
        a
    }

    pub fn holding_steps(&self, p: usize) -> u64 {
        self.lag[p]
    }
}

/// Runs the token simulator for steps `0..=horizon` and records the counters
/// at every step.
pub fn trace_counters(net: &PetriNet, delta: &Rational, horizon: u64, stream: RoutingStream) -> Result<Trajectory<i64>, DynamicsError> {
    let mut sim = TokenSimulator::new(net, delta, stream)?;
    Ok(record(&mut sim, horizon))
}

/// Records every step of an already configured simulator.
pub fn record(sim: &mut TokenSimulator<'_>, horizon: u64) -> Trajectory<i64> {
    let net = sim.net;
    let mut traj = Trajectory {
        delta: sim.delta.clone(),
        horizon,
        place_ids: net.places().iter().map(|p| p.id.clone()).collect(),
        transition_ids: net.transitions().iter().map(|q| q.id.clone()).collect(),
        steps: Vec::new(),
        x: Vec::new(),
        z: Vec::new(),
    };
    loop {
        let k = sim.step();
        traj.steps.push(k);
        traj.x.push(sim.x.clone());
        traj.z.push(sim.z.clone());
        if k >= horizon {
            return traj;
        }
    }
}
