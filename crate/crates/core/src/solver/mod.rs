//! Stationary regimes: affine germs solving the germ fixpoint system.
//!
//! Every min-type constraint is replaced by one of its terms (a
//! *selection*), which turns the system into a linear one over ℚ in the
//! scalar unknowns `(ρ_v, u_v)`. Each selection is solved exactly and kept
//! only if the chosen terms really attain their minima, all throughputs are
//! non-negative, and the priority branch assumption holds.

pub mod linalg;
mod system;

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::dynamics::{fluid_arith_with, DynamicsError, Simulator};
use crate::germ::Germ;
use crate::model::PetriNet;
use crate::rational::{DisplayRational, Rational};

pub use system::{
    build_system, Branch, Choice, Constraint, ConstraintKind, GermExpr, GermSystem, Rhs, Term, Unknown, UnknownKind,
};

use linalg::{feasible_point, Inequality, LinearSolution};

/// One alternative per constraint, in constraint order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    pub choices: Vec<Choice>,
}

impl Selection {
    /// Decodes a selection index in mixed radix (first constraint fastest).
    pub fn from_index(sys: &GermSystem, mut index: u128) -> Selection {
        let choices = sys
            .constraints
            .iter()
            .map(|c| {
                let options = c.choices();
                let n = options.len() as u128;
                let pick = options[(index % n) as usize];
                index /= n;
                pick
            })
            .collect();
        Selection { choices }
    }

    pub fn render(&self, sys: &GermSystem) -> String {
        let mut parts = Vec::new();
        for (c, choice) in sys.constraints.iter().zip(&self.choices) {
            if c.choices().len() < 2 {
                continue;
            }
            let id = &sys.unknowns[c.target].id;
            let branch = match choice.branch {
                Some(Branch::LowIdle) => "/idle",
                Some(Branch::LowActive) => "/active",
                None => "",
            };
            parts.push(format!("{id}={}{branch}", choice.term));
        }
        if parts.is_empty() {
            "-".to_owned()
        } else {
            parts.join(" ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationarySolution {
    /// Germ of every unknown, in system order.
    pub values: Vec<Germ>,
    pub selection: Selection,
    pub selection_index: u128,
    /// Dimension of the family of u-components sharing these throughputs;
    /// zero when the solution is unique for its selection. `values` is the
    /// family member closest to the origin coordinate by coordinate.
    pub free_dimension: usize,
}

impl StationarySolution {
    pub fn get<'a>(&'a self, sys: &GermSystem, id: &str) -> Option<&'a Germ> {
        sys.unknown_index(id).map(|i| &self.values[i])
    }

    pub fn rho<'a>(&'a self, sys: &GermSystem, id: &str) -> Option<&'a Rational> {
        self.get(sys, id).and_then(Germ::rho)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    /// The linear system of the selection has no solution.
    Inconsistent,
    NegativeThroughput { unknown: usize },
    /// `ρ_low > 0` was assumed but does not hold.
    BranchViolated { unknown: usize },
    /// Some selected term is larger than another term of its minimum.
    MinNotAttained { constraint: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectionOutcome {
    Solution(StationarySolution),
    Infeasible(Infeasibility),
    /// The throughputs are not determined by the selection.
    Degenerate { nullity: usize },
}

fn form_value(form: &BTreeMap<usize, Rational>, vars: &[Rational]) -> Rational {
    form.iter().map(|(&i, c)| c * &vars[i]).sum()
}

pub fn solve_selection(sys: &GermSystem, selection: &Selection, selection_index: u128) -> SelectionOutcome {
    let v = sys.unknowns.len();
    let n = 2 * v;
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n + 4);
    let mut chosen: Vec<&GermExpr> = Vec::with_capacity(sys.constraints.len());
    for (c, choice) in sys.constraints.iter().zip(&selection.choices) {
        let expr = c.terms(choice.branch)[choice.term];
        chosen.push(expr);
        for (target, form, constant) in [
            (2 * c.target, expr.rho_form(), Rational::zero()),
            (2 * c.target + 1, expr.u_form(), expr.constant.clone()),
        ] {
            let mut row = vec![Rational::zero(); n + 1];
            row[target] += Rational::from_integer(1.into());
            for (i, coeff) in form {
                row[i] -= coeff;
            }
            row[n] = constant;
            rows.push(row);
        }
        if let (Some(Branch::LowIdle), Rhs::PriorityHigh { low, .. }) = (choice.branch, &c.rhs) {
            let mut row = vec![Rational::zero(); n + 1];
            row[2 * low] = Rational::from_integer(1.into());
            rows.push(row);
        }
    }
    let (particular, null_basis) = match linalg::solve(rows, n) {
        LinearSolution::Inconsistent => return SelectionOutcome::Infeasible(Infeasibility::Inconsistent),
        LinearSolution::Solved { particular, null_basis } => (particular, null_basis),
    };
    if null_basis.iter().any(|b| (0..v).any(|i| !b[2 * i].is_zero())) {
        return SelectionOutcome::Degenerate {
            nullity: null_basis.len(),
        };
    }
    for i in 0..v {
        if particular[2 * i].is_negative() {
            return SelectionOutcome::Infeasible(Infeasibility::NegativeThroughput { unknown: i });
        }
    }
    for (c, choice) in sys.constraints.iter().zip(&selection.choices) {
        if let (Some(Branch::LowActive), Rhs::PriorityHigh { low, .. }) = (choice.branch, &c.rhs) {
            if !particular[2 * low].is_positive() {
                return SelectionOutcome::Infeasible(Infeasibility::BranchViolated { unknown: *low });
            }
        }
    }

    // The chosen term must not exceed any other term of its minimum. Where
    // the throughputs tie, this is a linear inequality in the free
    // u-parameters.
    let dim = null_basis.len();
    let mut inequalities = Vec::new();
    for (ci, (c, choice)) in sys.constraints.iter().zip(&selection.choices).enumerate() {
        let terms = c.terms(choice.branch);
        if terms.len() < 2 {
            continue;
        }
        let selected = chosen[ci];
        let rho_sel = form_value(&selected.rho_form(), &particular);
        for (ti, other) in terms.iter().enumerate() {
            if ti == choice.term {
                continue;
            }
            let rho_other = form_value(&other.rho_form(), &particular);
            if rho_sel > rho_other {
                return SelectionOutcome::Infeasible(Infeasibility::MinNotAttained { constraint: ci });
            }
            if rho_sel < rho_other {
                continue;
            }
            // u_other(θ) − u_sel(θ) ≥ 0
            let mut diff = other.u_form();
            for (i, c) in selected.u_form() {
                *diff.entry(i).or_insert_with(Rational::zero) -= c;
            }
            let constant = form_value(&diff, &particular) + &other.constant - &selected.constant;
            let coeffs = null_basis.iter().map(|b| form_value(&diff, b)).collect();
            inequalities.push(Inequality { coeffs, constant });
        }
    }
    let Some(theta) = feasible_point(&inequalities, dim) else {
        let ci = sys.constraints.len();
        return SelectionOutcome::Infeasible(Infeasibility::MinNotAttained { constraint: ci });
    };
    let mut vars = particular;
    for (t, b) in theta.iter().zip(&null_basis) {
        if t.is_zero() {
            continue;
        }
        for (x, bi) in vars.iter_mut().zip(b) {
            *x += t * bi;
        }
    }
    let values = (0..v).map(|i| Germ::new(vars[2 * i].clone(), vars[2 * i + 1].clone())).collect();
    SelectionOutcome::Solution(StationarySolution {
        values,
        selection: selection.clone(),
        selection_index,
        free_dimension: dim,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolveReport {
    /// Distinct solutions, ordered by the first selection producing them.
    pub solutions: Vec<StationarySolution>,
    pub selection_count: u128,
    pub infeasible: u128,
    /// Selection index and null-space dimension of degenerate selections.
    pub degenerate: Vec<(u128, usize)>,
    /// Selections that reproduced an already found solution.
    pub duplicates: u128,
}

/// Solves every selection (in parallel) and merges the results.
pub fn solve_all(sys: &GermSystem) -> SolveReport {
    let count = sys.selection_count();
    let outcomes: Vec<(u128, SelectionOutcome)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let i = i as u128;
            let sel = Selection::from_index(sys, i);
            (i, solve_selection(sys, &sel, i))
        })
        .collect();
    let mut report = SolveReport {
        selection_count: count,
        ..SolveReport::default()
    };
    for (i, outcome) in outcomes {
        match outcome {
            SelectionOutcome::Solution(s) => {
                if report.solutions.iter().any(|t| t.values == s.values) {
                    report.duplicates += 1;
                } else {
                    report.solutions.push(s);
                }
            }
            SelectionOutcome::Infeasible(_) => report.infeasible += 1,
            SelectionOutcome::Degenerate { nullity } => report.degenerate.push((i, nullity)),
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintResidual {
    pub kind: ConstraintKind,
    pub target: String,
    /// `lhs − rhs`; `Top` when the right-hand side is `Top`.
    pub residual: Germ,
}

impl ConstraintResidual {
    pub fn is_zero(&self) -> bool {
        self.residual == Germ::zero()
    }
}

/// Residual of every constraint at `candidate` (one germ per unknown).
pub fn residual(sys: &GermSystem, candidate: &[Germ]) -> Vec<ConstraintResidual> {
    sys.constraints
        .iter()
        .map(|c| {
            let rhs = c.eval(candidate);
            let residual = match rhs.neg() {
                Ok(neg) => &candidate[c.target] + &neg,
                Err(_) => Germ::Top,
            };
            ConstraintResidual {
                kind: c.kind,
                target: sys.unknowns[c.target].id.clone(),
                residual,
            }
        })
        .collect()
}

/// Writes `solution_id,unknown_id,rho,u`, solutions numbered from 1.
pub fn write_solutions_csv<W: io::Write>(sys: &GermSystem, solutions: &[StationarySolution], out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "solution_id,unknown_id,rho,u")?;
    for (i, s) in solutions.iter().enumerate() {
        for (unknown, g) in sys.unknowns.iter().zip(&s.values) {
            match g {
                Germ::Affine { rho, u } => {
                    writeln!(out, "{},{},{},{}", i + 1, unknown.id, DisplayRational(rho), DisplayRational(u))?
                }
                Germ::Top => writeln!(out, "{},{},TOP,TOP", i + 1, unknown.id)?,
            }
        }
    }
    io::Write::flush(&mut out)
}

use std::io::Write as _;

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} selections: {} solutions, {} duplicates, {} infeasible, {} degenerate",
            self.selection_count,
            self.solutions.len(),
            self.duplicates,
            self.infeasible,
            self.degenerate.len()
        )
    }
}

/// Checks that the step functions `x(kδ) = u + ρkδ` built from a solution
/// of [`build_system`]`(net)` satisfy one fluid step of the discrete
/// dynamics at step `k`. Returns the unknowns whose recomputed value
/// differs.
pub fn round_trip_mismatches(
    net: &PetriNet,
    solution: &StationarySolution,
    delta: &Rational,
    k: i64,
) -> Result<Vec<usize>, DynamicsError> {
    let np = net.place_count();
    let at = |g: &Germ, j: i64| -> Rational {
        match g {
            Germ::Affine { rho, u } => u + rho * delta * Rational::from_integer(j.into()),
            Germ::Top => panic!("stationary solutions are finite"),
        }
    };
    let mut denominators: Vec<BigInt> = vec![delta.denom().clone()];
    for g in &solution.values {
        if let Germ::Affine { rho, u } = g {
            denominators.push(rho.denom().clone());
            denominators.push(u.denom().clone());
            denominators.push((rho * delta).denom().clone());
        }
    }
    let arith = fluid_arith_with(net, denominators);
    let history = arith.clone();
    let mut sim = Simulator::new(net, delta, arith)?;
    let values = &solution.values;
    sim.seed_history(
        k,
        |p, j| history.from_rational(&at(&values[p], j)),
        |q, j| history.from_rational(&at(&values[np + q], j)),
    );
    sim.step();
    let mut mismatches = Vec::new();
    for p in 0..np {
        if history.to_rational(sim.x(p)) != at(&values[p], k) {
            mismatches.push(p);
        }
    }
    for q in 0..net.transition_count() {
        if history.to_rational(sim.z(q)) != at(&values[np + q], k) {
            mismatches.push(np + q);
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetDescription;
    use crate::rational::{int, ratio};

    // Two-place cycle: p0 (τ=1, M=2) -> a -> p1 (τ=2) -> b -> p0.
    fn cycle() -> PetriNet {
        let mut d = NetDescription::default();
        d.place("p0", int(1), int(2))
            .place("p1", int(2), int(0))
            .transition("a")
            .transition("b")
            .input("p0", "a")
            .output("a", "p1")
            .input("p1", "b")
            .output("b", "p0");
        PetriNet::new(d).unwrap()
    }

    #[test]
    fn no_priority_means_no_branches() {
        let sys = build_system(&cycle());
        assert!(sys.constraints.iter().all(|c| matches!(c.rhs, Rhs::Min(_))));
        assert_eq!(sys.selection_count(), 1);
    }

    #[test]
    fn simple_cycle_fixes_throughput_but_not_phase() {
        // Going once around the cycle takes 3 time units for 2 tokens; the
        // common offset of the counters is free.
        let net = cycle();
        let sys = build_system(&net);
        let report = solve_all(&sys);
        assert_eq!(report.solutions.len(), 1);
        let s = &report.solutions[0];
        assert_eq!(s.rho(&sys, "a"), Some(&ratio(2, 3)));
        assert_eq!(s.free_dimension, 1);
        assert!(round_trip_mismatches(&net, s, &int(1), 1_000_000).unwrap().is_empty());
    }

    #[test]
    fn synchronization_fixes_the_throughput() {
        // Add a self-loop place on `a` with one token and holding time 1:
        // a cannot fire faster than once per time unit.
        let mut d = cycle().description().clone();
        d.place("lim", int(1), int(1)).input("lim", "a").output("a", "lim");
        let net = PetriNet::new(d).unwrap();
        let sys = build_system(&net);
        let report = solve_all(&sys);
        assert!(report.solutions.len() >= 1, "{report}");
        for s in &report.solutions {
            assert!(residual(&sys, &s.values).iter().all(ConstraintResidual::is_zero));
            assert!(round_trip_mismatches(&net, s, &int(1), 1_000_000).unwrap().is_empty());
        }
        // Two tokens on a cycle of length 3 allow 2/3, the limiter allows 1.
        let rhos: Vec<Rational> = report.solutions.iter().map(|s| s.rho(&sys, "a").unwrap().clone()).collect();
        assert!(rhos.contains(&ratio(2, 3)), "{rhos:?}");
    }

    #[test]
    fn residual_detects_perturbation() {
        let mut d = cycle().description().clone();
        d.place("lim", int(1), int(1)).input("lim", "a").output("a", "lim");
        let net = PetriNet::new(d).unwrap();
        let sys = build_system(&net);
        let mut s = solve_all(&sys).solutions.remove(0);
        let p0 = sys.unknown_index("p0").unwrap();
        if let Germ::Affine { u, .. } = &mut s.values[p0] {
            *u += int(1);
        }
        let res = residual(&sys, &s.values);
        assert!(res.iter().any(|r| r.target == "p0" && r.kind == ConstraintKind::PlaceBalance && !r.is_zero()));
    }

    #[test]
    fn selection_decoding_is_mixed_radix() {
        let mut d = cycle().description().clone();
        d.place("lim", int(1), int(1)).input("lim", "a").output("a", "lim");
        let sys = build_system(&PetriNet::new(d).unwrap());
        assert_eq!(sys.selection_count(), 2);
        let a = sys.unknown_index("a").unwrap();
        let ci = sys.constraints.iter().position(|c| c.target == a).unwrap();
        assert_eq!(Selection::from_index(&sys, 0).choices[ci].term, 0);
        assert_eq!(Selection::from_index(&sys, 1).choices[ci].term, 1);
    }

    #[test]
    fn csv_rows() {
        let mut d = cycle().description().clone();
        d.place("lim", int(1), int(1)).input("lim", "a").output("a", "lim");
        let sys = build_system(&PetriNet::new(d).unwrap());
        let report = solve_all(&sys);
        let mut buf = Vec::new();
        write_solutions_csv(&sys, &report.solutions, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("solution_id,unknown_id,rho,u\n1,p0,"));
        assert_eq!(text.lines().count(), 1 + report.solutions.len() * sys.unknowns.len());
    }
}
