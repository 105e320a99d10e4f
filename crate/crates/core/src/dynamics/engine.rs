use crate::model::{PetriNet, TransitionKind};
use crate::rational::{steps_of, Rational};

use super::arith::CounterArith;
use super::DynamicsError;

struct ConflictGroup {
    place: usize,
    outs: Vec<usize>,
    probs: Vec<Rational>,
}

/// One δ-discretized counter simulation. Places keep a ring buffer deep
/// enough for their largest holding time; transitions only need the
/// previous step (for the low-priority term of the high-priority equation).
pub struct Simulator<'n, A: CounterArith> {
    net: &'n PetriNet,
    arith: A,
    delta: Rational,
    lag: Vec<i64>,
    depth: usize,
    marking: Vec<A::Value>,
    x_ring: Vec<Vec<A::Value>>,
    z_last: Vec<A::Value>,
    z_work: Vec<A::Value>,
    conflicts: Vec<ConflictGroup>,
    // Sync and high-priority transitions, then low-priority ones.
    ordered: Vec<usize>,
    next_step: i64,
}

impl<'n, A: CounterArith> Simulator<'n, A> {
    pub fn new(net: &'n PetriNet, delta: &Rational, arith: A) -> Result<Self, DynamicsError> {
        use num_traits::Signed;
        if !delta.is_positive() {
            return Err(DynamicsError::NonPositiveStep);
        }
        let mut lag = Vec::with_capacity(net.place_count());
        for p in net.places() {
            match steps_of(&p.holding_time, delta) {
                Some(k) if k > 0 => lag.push(k as i64),
                _ => {
                    return Err(DynamicsError::StepMismatch {
                        place: p.id.clone(),
                        delta: delta.clone(),
                    })
                }
            }
        }
        let depth = lag.iter().copied().max().unwrap_or(0) as usize + 1;
        let marking: Vec<A::Value> = net.places().iter().map(|p| arith.constant(&p.initial_marking)).collect();
        let zero = arith.constant(&Rational::default());
        let x_ring = marking.iter().map(|m| vec![m.clone(); depth]).collect();

        let mut conflicts: Vec<ConflictGroup> = Vec::new();
        let mut ordered = Vec::new();
        let mut lows = Vec::new();
        for q in 0..net.transition_count() {
            match net.transition_kind(q) {
                TransitionKind::Routed { place, prob } => {
                    match conflicts.iter_mut().find(|g| g.place == *place) {
                        Some(g) => {
                            g.outs.push(q);
                            g.probs.push(prob.clone());
                        }
                        None => conflicts.push(ConflictGroup {
                            place: *place,
                            outs: vec![q],
                            probs: vec![prob.clone()],
                        }),
                    }
                }
                TransitionKind::PriorityLow { .. } => lows.push(q),
                _ => ordered.push(q),
            }
        }
        ordered.extend(lows);

        Ok(Simulator {
            net,
            arith,
            delta: delta.clone(),
            lag,
            depth,
            marking,
            x_ring,
            z_last: vec![zero.clone(); net.transition_count()],
            z_work: vec![zero; net.transition_count()],
            conflicts,
            ordered,
            next_step: 0,
        })
    }

    pub fn arith(&self) -> &A {
        &self.arith
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn net(&self) -> &PetriNet {
        self.net
    }

    /// Index of the next step to be computed.
    pub fn next_step(&self) -> i64 {
        self.next_step
    }

    /// Replaces the history so that the next call to [`step`](Self::step)
    /// computes step `k`. `x(p, j)` and `z(q, j)` supply counter values at
    /// earlier steps `j < k`; negative `j` follow the pre-history convention
    /// and are not queried.
    pub fn seed_history(&mut self, k: i64, mut x: impl FnMut(usize, i64) -> A::Value, mut z: impl FnMut(usize, i64) -> A::Value) {
        for p in 0..self.marking.len() {
            for j in (k - self.depth as i64).max(0)..k {
                self.x_ring[p][j as usize % self.depth] = x(p, j);
            }
        }
        let zero = self.arith.constant(&Rational::default());
        for q in 0..self.z_last.len() {
            self.z_last[q] = if k > 0 { z(q, k - 1) } else { zero.clone() };
        }
        self.next_step = k;
    }

    fn x_at(&self, p: usize, k: i64) -> &A::Value {
        if k < 0 {
            &self.marking[p]
        } else {
            &self.x_ring[p][k as usize % self.depth]
        }
    }

    fn delayed_min(&self, companions: &[usize], k: i64, first: A::Value) -> A::Value {
        companions
            .iter()
            .fold(first, |acc, &r| self.arith.min(acc, self.x_at(r, k - self.lag[r]).clone()))
    }

    /// Computes all counters at the next step and returns its index.
    pub fn step(&mut self) -> i64 {
        let k = self.next_step;

        for g in &self.conflicts {
            let available = self.x_at(g.place, k - self.lag[g.place]).clone();
            let previous: Vec<A::Value> = g.outs.iter().map(|&q| self.z_last[q].clone()).collect();
            let mut out = previous.clone();
            self.arith.route(g.place, &available, &g.probs, &previous, &mut out);
            for (&q, v) in g.outs.iter().zip(out) {
                self.z_work[q] = v;
            }
        }

        for &q in &self.ordered {
            let value = match self.net.transition_kind(q) {
                TransitionKind::Sync => {
                    let inputs = self.net.transition_inputs(q);
                    let first = self.x_at(inputs[0], k - self.lag[inputs[0]]).clone();
                    self.delayed_min(&inputs[1..], k, first)
                }
                TransitionKind::PriorityHigh {
                    place,
                    sibling,
                    companions,
                } => {
                    let own = self.arith.sub(self.x_at(*place, k - self.lag[*place]), &self.z_last[*sibling]);
                    self.delayed_min(companions, k, own)
                }
                TransitionKind::PriorityLow {
                    place,
                    sibling,
                    companions,
                } => {
                    let own = self.arith.sub(self.x_at(*place, k - self.lag[*place]), &self.z_work[*sibling]);
                    self.delayed_min(companions, k, own)
                }
                TransitionKind::Routed { .. } => unreachable!("routed transitions are handled per place"),
            };
            self.z_work[q] = value;
        }

        let slot = k as usize % self.depth;
        for p in 0..self.marking.len() {
            let x = self
                .net
                .place_inputs(p)
                .iter()
                .fold(self.marking[p].clone(), |acc, &q| self.arith.add(&acc, &self.z_work[q]));
            self.x_ring[p][slot] = x;
        }
        std::mem::swap(&mut self.z_last, &mut self.z_work);
        self.next_step = k + 1;
        k
    }

    /// `x_p` at the last computed step.
    pub fn x(&self, p: usize) -> &A::Value {
        self.x_at(p, self.next_step - 1)
    }

    /// `z_q` at the last computed step.
    pub fn z(&self, q: usize) -> &A::Value {
        &self.z_last[q]
    }
}
