//! The three-counter reduction of the call-center net.
//!
//! With `z1`, `z5`, `z6` the counters of `q1`, `q5`, `q6`:
//!
//! ```text
//! z1(t) = N1 + z5(t − τ_tr) + π_ur z1(t − τ_ur) + π_adv z1(t − τ_adv)
//! a(t)  = N2 + z5(t − τ_tr − τ'_ext) + z6(t − τ'_ur)
//! z5(t) = min(a(t) − z6(t − δ), π_ext z1(t − τ_ext))
//! z6(t) = min(a(t) − z5(t),     π_ur z1(t − τ_ur))
//! ```
//!
//! and every counter is zero before time 0.

use num_traits::{Signed, Zero};

use crate::dynamics::{DynamicsError, FluidArith, FluidValue, Recording, Trajectory};
use crate::model::{PlaceId, TransitionId};
use crate::rational::{steps_of, Rational};

use super::{CallCenterError, CallCenterParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReducedCounter {
    Z1,
    Z5,
    Z6,
}

impl ReducedCounter {
    pub const ALL: [ReducedCounter; 3] = [ReducedCounter::Z1, ReducedCounter::Z5, ReducedCounter::Z6];

    /// Transition of the full net counted by this counter.
    pub fn transition_id(self) -> &'static str {
        match self {
            ReducedCounter::Z1 => "q1",
            ReducedCounter::Z5 => "q5",
            ReducedCounter::Z6 => "q6",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedState {
    pub z1: Rational,
    pub z5: Rational,
    pub z6: Rational,
}

impl ReducedState {
    pub fn get(&self, c: ReducedCounter) -> &Rational {
        match c {
            ReducedCounter::Z1 => &self.z1,
            ReducedCounter::Z5 => &self.z5,
            ReducedCounter::Z6 => &self.z6,
        }
    }
}

/// Delays of the reduced dynamics, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lags {
    tr: i64,
    ur: i64,
    adv: i64,
    ext: i64,
    ext_loop: i64,
    ur2: i64,
}

impl Lags {
    fn max(&self) -> i64 {
        [self.tr, self.ur, self.adv, self.ext, self.ext_loop, self.ur2].into_iter().max().unwrap_or(1)
    }
}

/// Parameters bound to a time step.
#[derive(Debug, Clone)]
pub struct ReducedDynamics {
    params: CallCenterParams,
    delta: Rational,
    lags: Lags,
}

impl ReducedDynamics {
    pub fn new(params: &CallCenterParams, delta: &Rational) -> Result<Self, CallCenterError> {
        params.validate()?;
        if !delta.is_positive() {
            return Err(DynamicsError::NonPositiveStep.into());
        }
        let lag = |name: &str, tau: &Rational| -> Result<i64, CallCenterError> {
            match steps_of(tau, delta) {
                Some(k) if k > 0 => Ok(k as i64),
                _ => Err(DynamicsError::StepMismatch {
                    place: PlaceId(name.to_string()),
                    delta: delta.clone(),
                }
                .into()),
            }
        };
        let lags = Lags {
            tr: lag("tau_tr", &params.tau_tr)?,
            ur: lag("tau_ur", &params.tau_ur)?,
            adv: lag("tau_adv", &params.tau_adv)?,
            ext: lag("tau_ext", &params.tau_ext)?,
            ext_loop: lag("tau_ext2", &(&params.tau_tr + &params.tau_ext2))?,
            ur2: lag("tau_ur2", &params.tau_ur2)?,
        };
        Ok(ReducedDynamics {
            params: params.clone(),
            delta: delta.clone(),
            lags,
        })
    }

    pub fn params(&self) -> &CallCenterParams {
        &self.params
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    /// Counters at step `k` from the values at earlier steps. `history` is
    /// only called with indices in `0..k`.
    pub fn reduced_step(&self, history: impl Fn(ReducedCounter, i64) -> Rational, k: i64) -> ReducedState {
        if k < 0 {
            return ReducedState {
                z1: Rational::zero(),
                z5: Rational::zero(),
                z6: Rational::zero(),
            };
        }
        let h = |c, j: i64| if j < 0 { Rational::zero() } else { history(c, j) };
        let p = &self.params;
        let l = &self.lags;
        use ReducedCounter::*;
        let z1 = &p.n1 + h(Z5, k - l.tr) + &p.pi_ur * h(Z1, k - l.ur) + &p.pi_adv * h(Z1, k - l.adv);
        let available = &p.n2 + h(Z5, k - l.ext_loop) + h(Z6, k - l.ur2);
        let z5 = (&available - h(Z6, k - 1)).min(&p.pi_ext * h(Z1, k - l.ext));
        let z6 = (&available - &z5).min(&p.pi_ur * h(Z1, k - l.ur));
        ReducedState { z1, z5, z6 }
    }
}

/// Exact fluid simulation of the reduced dynamics.
#[derive(Debug, Clone)]
pub struct ReducedSimulator {
    dynamics: ReducedDynamics,
    arith: FluidArith,
    n1: FluidValue,
    n2: FluidValue,
    zero: FluidValue,
    depth: usize,
    rings: [Vec<FluidValue>; 3],
    next: i64,
}

impl ReducedSimulator {
    pub fn new(dynamics: ReducedDynamics) -> Self {
        let p = dynamics.params();
        let denominators = [&p.n1, &p.n2, &p.pi_ext, &p.pi_ur, &p.pi_adv].map(|r| r.denom().clone());
        let arith = FluidArith::new(denominators.iter());
        let depth = dynamics.lags.max() as usize + 1;
        let zero = arith.from_rational(&Rational::zero());
        ReducedSimulator {
            n1: arith.from_rational(&p.n1),
            n2: arith.from_rational(&p.n2),
            rings: std::array::from_fn(|_| vec![zero.clone(); depth]),
            zero,
            depth,
            arith,
            dynamics,
            next: 0,
        }
    }

    pub fn next_step(&self) -> i64 {
        self.next
    }

    fn at(&self, c: ReducedCounter, k: i64) -> &FluidValue {
        if k < 0 {
            &self.zero
        } else {
            &self.rings[c.slot()][k as usize % self.depth]
        }
    }

    /// Computes the next step and returns its index.
    pub fn step(&mut self) -> i64 {
        use ReducedCounter::*;
        let k = self.next;
        let l = self.dynamics.lags;
        let p = &self.dynamics.params;
        let a = &self.arith;
        let ur_share = a.scale(self.at(Z1, k - l.ur), &p.pi_ur);
        let z1 = a.add(
            &a.add(&self.n1, self.at(Z5, k - l.tr)),
            &a.add(&ur_share, &a.scale(self.at(Z1, k - l.adv), &p.pi_adv)),
        );
        let available = a.add(&a.add(&self.n2, self.at(Z5, k - l.ext_loop)), self.at(Z6, k - l.ur2));
        let ext_share = a.scale(self.at(Z1, k - l.ext), &p.pi_ext);
        let z5 = a.min(&a.sub(&available, self.at(Z6, k - 1)), &ext_share).clone();
        let z6 = a.min(&a.sub(&available, &z5), &ur_share).clone();
        let slot = k as usize % self.depth;
        self.rings[Z1.slot()][slot] = z1;
        self.rings[Z5.slot()][slot] = z5;
        self.rings[Z6.slot()][slot] = z6;
        self.next += 1;
        k
    }

    /// Value at the last computed step.
    pub fn value(&self, c: ReducedCounter) -> Rational {
        self.arith.to_rational(self.at(c, self.next - 1))
    }

    /// Whether the counter is zero at the last computed step. Cheaper than
    /// [`value`](Self::value) on long runs.
    pub fn is_zero(&self, c: ReducedCounter) -> bool {
        self.arith.is_zero(self.at(c, self.next - 1))
    }

    /// Value at step `k`, which must be among the last `depth` steps.
    pub fn value_at(&self, c: ReducedCounter, k: i64) -> Rational {
        assert!(k < self.next && k + self.depth as i64 >= self.next, "step {k} is not buffered");
        self.arith.to_rational(self.at(c, k))
    }

    pub fn state(&self) -> ReducedState {
        ReducedState {
            z1: self.value(ReducedCounter::Z1),
            z5: self.value(ReducedCounter::Z5),
            z6: self.value(ReducedCounter::Z6),
        }
    }
}

/// Runs the reduced dynamics over steps `0..=horizon`. The trajectory has
/// no places and the transitions `q1`, `q5`, `q6`.
pub fn simulate_reduced(
    params: &CallCenterParams,
    delta: &Rational,
    horizon: u64,
    recording: &Recording,
) -> Result<Trajectory<Rational>, CallCenterError> {
    let mut sim = ReducedSimulator::new(ReducedDynamics::new(params, delta)?);
    let mut traj = Trajectory {
        delta: delta.clone(),
        horizon,
        place_ids: Vec::new(),
        transition_ids: ReducedCounter::ALL.iter().map(|c| TransitionId(c.transition_id().into())).collect(),
        steps: Vec::new(),
        x: Vec::new(),
        z: Vec::new(),
    };
    for k in 0..=horizon {
        sim.step();
        if recording.keeps(k, horizon) {
            let s = sim.state();
            traj.steps.push(k);
            traj.x.push(Vec::new());
            traj.z.push(vec![s.z1, s.z5, s.z6]);
        }
    }
    Ok(traj)
}
