//! Residual checks of the counter equations on a recorded trajectory.
//!
//! Written independently of the engine: it reads values back from a full
//! trajectory and evaluates every equation family directly.

use std::fmt;

use crate::model::{PetriNet, PlaceClass, TransitionKind};
use crate::rational::{steps_of, DisplayRational, Rational};

use super::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    PlaceBalance,
    Conflict,
    Sync,
    PriorityHigh,
    PriorityLow,
    Monotone,
}

/// How conflict places are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictForm {
    /// `Σ_out z_q(t) = x_p(t − τ_p)`.
    Conserved,
    /// `z_q(t) = π_q · x_p(t − τ_p)`.
    Proportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: Family,
    pub step: u64,
    /// Place or transition the equation is attached to.
    pub node: String,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} at step {} for {}: {} vs {}",
            self.family,
            self.step,
            self.node,
            DisplayRational(&self.lhs),
            DisplayRational(&self.rhs)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    /// Equalities that do not hold exactly.
    pub equalities: Vec<Violation>,
    /// Relaxed inequalities (`lhs ≤ rhs`) that fail.
    pub inequalities: Vec<Violation>,
}

impl ResidualReport {
    pub fn exact(&self) -> bool {
        self.equalities.is_empty() && self.inequalities.is_empty()
    }
}

struct View<'a> {
    net: &'a PetriNet,
    traj: &'a Trajectory<Rational>,
    lag: Vec<i64>,
}

impl View<'_> {
    fn x(&self, p: usize, k: i64) -> Rational {
        if k < 0 {
            self.net.places()[p].initial_marking.clone()
        } else {
            self.traj.x[k as usize][p].clone()
        }
    }

    fn z(&self, q: usize, k: i64) -> Rational {
        if k < 0 {
            Rational::default()
        } else {
            self.traj.z[k as usize][q].clone()
        }
    }

    fn delayed(&self, p: usize, k: i64) -> Rational {
        self.x(p, k - self.lag[p])
    }

    fn delayed_min(&self, first: Rational, others: &[usize], k: i64) -> Rational {
        others.iter().fold(first, |m, &r| m.min(self.delayed(r, k)))
    }
}

/// Checks a trajectory recorded at every step from 0.
///
/// Panics if the trajectory is not complete or `δ` does not divide the
/// holding times.
pub fn check(net: &PetriNet, traj: &Trajectory<Rational>, conflict: ConflictForm) -> ResidualReport {
    assert!(
        traj.steps.iter().enumerate().all(|(i, &k)| k == i as u64),
        "residual check needs every step recorded"
    );
    let lag = net
        .places()
        .iter()
        .map(|p| steps_of(&p.holding_time, &traj.delta).expect("holding time on the grid") as i64)
        .collect();
    let v = View { net, traj, lag };
    let mut report = ResidualReport::default();
    let mut eq = |family, step: i64, node: String, lhs: Rational, rhs: Rational| {
        let violation = Violation {
            family,
            step: step as u64,
            node,
            lhs: lhs.clone(),
            rhs: rhs.clone(),
        };
        if lhs > rhs {
            report.inequalities.push(violation.clone());
        }
        if lhs != rhs {
            report.equalities.push(violation);
        }
    };

    for k in 0..traj.len() as i64 {
        for (p, place) in net.places().iter().enumerate() {
            let inflow = net
                .place_inputs(p)
                .iter()
                .fold(place.initial_marking.clone(), |s, &q| s + v.z(q, k));
            eq(Family::PlaceBalance, k, place.id.0.clone(), v.x(p, k), inflow.clone());
            eq(Family::PlaceBalance, k, place.id.0.clone(), inflow, v.x(p, k));
            if v.x(p, k) < v.x(p, k - 1) {
                eq(Family::Monotone, k, place.id.0.clone(), v.x(p, k - 1), v.x(p, k));
            }
            if let (PlaceClass::Conflict, ConflictForm::Conserved) = (net.place_class(p), conflict) {
                let routed = net.place_outputs(p).iter().fold(Rational::default(), |s, &q| s + v.z(q, k));
                eq(Family::Conflict, k, place.id.0.clone(), routed, v.delayed(p, k));
            }
        }
        for (q, tr) in net.transitions().iter().enumerate() {
            let id = tr.id.0.clone();
            if v.z(q, k) < v.z(q, k - 1) {
                eq(Family::Monotone, k, id.clone(), v.z(q, k - 1), v.z(q, k));
            }
            match net.transition_kind(q) {
                TransitionKind::Routed { place, prob } => {
                    if conflict == ConflictForm::Proportional {
                        eq(Family::Conflict, k, id, v.z(q, k), prob * v.delayed(*place, k));
                    }
                }
                TransitionKind::Sync => {
                    let inputs = net.transition_inputs(q);
                    let rhs = v.delayed_min(v.delayed(inputs[0], k), &inputs[1..], k);
                    eq(Family::Sync, k, id, v.z(q, k), rhs);
                }
                TransitionKind::PriorityHigh {
                    place,
                    sibling,
                    companions,
                } => {
                    let own = v.delayed(*place, k) - v.z(*sibling, k - 1);
                    eq(Family::PriorityHigh, k, id, v.z(q, k), v.delayed_min(own, companions, k));
                }
                TransitionKind::PriorityLow {
                    place,
                    sibling,
                    companions,
                } => {
                    let own = v.delayed(*place, k) - v.z(*sibling, k);
                    eq(Family::PriorityLow, k, id, v.z(q, k), v.delayed_min(own, companions, k));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_fluid, simulate_stochastic, Recording};
    use crate::model::NetDescription;
    use crate::rational::{int, ratio};

    fn net() -> PetriNet {
        let mut d = NetDescription::default();
        d.place("p0", int(1), int(3))
            .place("p1", int(2), int(0))
            .transition("a")
            .transition("b")
            .transition("c")
            .input("p0", "a")
            .output("a", "p1")
            .input("p1", "b")
            .input("p1", "c")
            .output("b", "p0")
            .output("c", "p0")
            .route("p1", &[("b", ratio(1, 3)), ("c", ratio(2, 3))]);
        PetriNet::new(d).unwrap()
    }

    #[test]
    fn engine_output_has_zero_residual() {
        let net = net();
        let fluid = simulate_fluid(&net, &int(1), 40, &Recording::Every(1)).unwrap();
        assert!(check(&net, &fluid, ConflictForm::Proportional).exact());
        let st = simulate_stochastic(&net, &int(1), 40, 3, &Recording::Every(1)).unwrap();
        assert!(check(&net, &st.to_rational(), ConflictForm::Conserved).exact());
    }

    #[test]
    fn detects_tampering() {
        let net = net();
        let mut fluid = simulate_fluid(&net, &int(1), 10, &Recording::Every(1)).unwrap();
        fluid.z[5][0] -= int(1);
        let report = check(&net, &fluid, ConflictForm::Proportional);
        assert!(!report.equalities.is_empty());
        assert!(report.equalities.iter().any(|v| v.family == Family::Sync && v.step == 5));
    }
}
