//! Germ fixpoint systems: one germ unknown per place and transition, each
//! defined by a (possibly min-of-terms) expression in the others.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::germ::Germ;
use crate::model::{PetriNet, TransitionKind};
use crate::rational::{DisplayRational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnknownKind {
    Place,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unknown {
    pub id: String,
    pub kind: UnknownKind,
}

/// `coeff · shift(X_unknown, shift)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub unknown: usize,
    pub coeff: Rational,
    pub shift: Rational,
}

/// `(0, constant) + Σ terms`: an affine germ expression.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GermExpr {
    pub constant: Rational,
    pub terms: Vec<Term>,
}

impl GermExpr {
    pub fn constant(u: Rational) -> Self {
        GermExpr {
            constant: u,
            terms: Vec::new(),
        }
    }

    pub fn var(unknown: usize) -> Self {
        GermExpr::default().plus(unknown, Rational::one(), Rational::zero())
    }

    pub fn shifted(unknown: usize, shift: Rational) -> Self {
        GermExpr::default().plus(unknown, Rational::one(), shift)
    }

    pub fn plus(mut self, unknown: usize, coeff: Rational, shift: Rational) -> Self {
        self.terms.push(Term { unknown, coeff, shift });
        self
    }

    pub fn add_constant(mut self, u: Rational) -> Self {
        self.constant += u;
        self
    }

    pub fn scaled(mut self, factor: &Rational) -> Self {
        self.constant *= factor;
        for t in &mut self.terms {
            t.coeff *= factor;
        }
        self
    }

    pub fn sum(mut self, other: GermExpr) -> Self {
        self.constant += other.constant;
        self.terms.extend(other.terms);
        self
    }

    /// Coefficients of the ρ-component over scalar variables (ρ of unknown
    /// `v` is variable `2v`, u is `2v + 1`).
    pub fn rho_form(&self) -> BTreeMap<usize, Rational> {
        let mut form = BTreeMap::new();
        for t in &self.terms {
            *form.entry(2 * t.unknown).or_insert_with(Rational::zero) += &t.coeff;
        }
        form.retain(|_, c| !c.is_zero());
        form
    }

    /// Coefficients of the u-component; the constant is [`GermExpr::constant`].
    pub fn u_form(&self) -> BTreeMap<usize, Rational> {
        let mut form = BTreeMap::new();
        for t in &self.terms {
            *form.entry(2 * t.unknown + 1).or_insert_with(Rational::zero) += &t.coeff;
            if !t.shift.is_zero() {
                *form.entry(2 * t.unknown).or_insert_with(Rational::zero) -= &t.coeff * &t.shift;
            }
        }
        form.retain(|_, c| !c.is_zero());
        form
    }

    pub fn eval(&self, values: &[Germ]) -> Germ {
        self.terms.iter().fold(Germ::new(Rational::zero(), self.constant.clone()), |acc, t| {
            let g = values[t.unknown].shift(&t.shift);
            let scaled = if t.coeff.is_one() {
                g
            } else {
                match g.scale(&t.coeff) {
                    Ok(s) => s,
                    Err(_) => Germ::Top,
                }
            };
            acc + scaled
        })
    }

    fn substitute(&self, target: usize, by: &GermExpr) -> GermExpr {
        let mut out = GermExpr::constant(self.constant.clone());
        for t in &self.terms {
            if t.unknown == target {
                out.constant += &t.coeff * &by.constant;
                for b in &by.terms {
                    out.terms.push(Term {
                        unknown: b.unknown,
                        coeff: &t.coeff * &b.coeff,
                        shift: &t.shift + &b.shift,
                    });
                }
            } else {
                out.terms.push(t.clone());
            }
        }
        out
    }

    fn reindex(&mut self, map: &[Option<usize>]) {
        for t in &mut self.terms {
            t.unknown = map[t.unknown].expect("eliminated unknowns are substituted first");
        }
    }

    pub(crate) fn render(&self, unknowns: &[Unknown]) -> String {
        let mut parts = Vec::new();
        if !self.constant.is_zero() || self.terms.is_empty() {
            parts.push(format!("(0, {})", DisplayRational(&self.constant)));
        }
        for t in &self.terms {
            let mut s = String::new();
            if !t.coeff.is_one() {
                s.push_str(&format!("{}·", DisplayRational(&t.coeff)));
            }
            if t.shift.is_zero() {
                s.push_str(&unknowns[t.unknown].id);
            } else {
                s.push_str(&format!("shift({}, {})", unknowns[t.unknown].id, DisplayRational(&t.shift)));
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    PlaceBalance,
    ConflictRouting,
    SyncMin,
    PriorityLowMin,
    PriorityHighMin,
}

/// Right-hand side of a defining constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    /// Minimum of the terms; a single term is an equality.
    Min(Vec<GermExpr>),
    /// `own ∧ companions` when `ρ_low = 0`, `companions` alone otherwise.
    PriorityHigh {
        low: usize,
        own: GermExpr,
        companions: Vec<GermExpr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `ρ_low = 0`
    LowIdle,
    /// `ρ_low > 0`
    LowActive,
}

/// One selectable alternative of a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Choice {
    pub term: usize,
    pub branch: Option<Branch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub target: usize,
    pub rhs: Rhs,
}

impl Constraint {
    /// Terms of the minimum under `branch` (ignored for plain minima).
    pub fn terms(&self, branch: Option<Branch>) -> Vec<&GermExpr> {
        match (&self.rhs, branch) {
            (Rhs::Min(terms), _) => terms.iter().collect(),
            (Rhs::PriorityHigh { own, companions, .. }, Some(Branch::LowIdle) | None) => {
                std::iter::once(own).chain(companions).collect()
            }
            (Rhs::PriorityHigh { companions, .. }, Some(Branch::LowActive)) => companions.iter().collect(),
        }
    }

    pub fn choices(&self) -> Vec<Choice> {
        match &self.rhs {
            Rhs::Min(terms) => (0..terms.len()).map(|term| Choice { term, branch: None }).collect(),
            Rhs::PriorityHigh { companions, .. } => (0..=companions.len())
                .map(|term| Choice {
                    term,
                    branch: Some(Branch::LowIdle),
                })
                .chain((0..companions.len()).map(|term| Choice {
                    term,
                    branch: Some(Branch::LowActive),
                }))
                .collect(),
        }
    }

    /// The right-hand side evaluated at `values`; the priority branch is
    /// read from the value of the low-priority unknown.
    pub fn eval(&self, values: &[Germ]) -> Germ {
        let branch = match &self.rhs {
            Rhs::PriorityHigh { low, .. } => Some(match values[*low].rho() {
                Some(r) if r.is_zero() => Branch::LowIdle,
                _ => Branch::LowActive,
            }),
            Rhs::Min(_) => None,
        };
        self.terms(branch)
            .into_iter()
            .fold(Germ::Top, |acc, t| acc.meet(&t.eval(values)))
    }

    fn substitute(&mut self, target: usize, by: &GermExpr) {
        match &mut self.rhs {
            Rhs::Min(terms) => terms.iter_mut().for_each(|t| *t = t.substitute(target, by)),
            Rhs::PriorityHigh { own, companions, .. } => {
                *own = own.substitute(target, by);
                companions.iter_mut().for_each(|t| *t = t.substitute(target, by));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GermSystem {
    pub unknowns: Vec<Unknown>,
    pub constraints: Vec<Constraint>,
}

impl GermSystem {
    pub fn unknown_index(&self, id: &str) -> Option<usize> {
        self.unknowns.iter().position(|u| u.id == id)
    }

    /// Number of selections: the product over constraints of their
    /// alternative counts.
    pub fn selection_count(&self) -> u128 {
        self.constraints
            .iter()
            .map(|c| c.choices().len() as u128)
            .try_fold(1u128, |acc, n| acc.checked_mul(n))
            .unwrap_or(u128::MAX)
    }

    /// Removes places with a single input transition and zero initial
    /// marking, substituting the input's germ for the place everywhere.
    pub fn eliminate_trivial_places(&self) -> GermSystem {
        let mut sys = self.clone();
        loop {
            let found = sys.constraints.iter().position(|c| {
                c.kind == ConstraintKind::PlaceBalance
                    && sys.unknowns[c.target].kind == UnknownKind::Place
                    && matches!(&c.rhs, Rhs::Min(t) if t.len() == 1
                        && t[0].constant.is_zero()
                        && t[0].terms.len() == 1
                        && t[0].terms[0].unknown != c.target
                        && t[0].terms[0].coeff.is_one()
                        && t[0].terms[0].shift.is_zero())
            });
            let Some(ci) = found else { return sys };
            let removed = sys.constraints.remove(ci);
            let Rhs::Min(mut terms) = removed.rhs else { unreachable!() };
            let by = terms.remove(0);
            for c in &mut sys.constraints {
                c.substitute(removed.target, &by);
                if let Rhs::PriorityHigh { low, .. } = &c.rhs {
                    assert_ne!(*low, removed.target, "low-priority unknowns are transitions");
                }
            }
            let map: Vec<Option<usize>> = (0..sys.unknowns.len())
                .map(|v| match v.cmp(&removed.target) {
                    std::cmp::Ordering::Less => Some(v),
                    std::cmp::Ordering::Equal => None,
                    std::cmp::Ordering::Greater => Some(v - 1),
                })
                .collect();
            sys.unknowns.remove(removed.target);
            for c in &mut sys.constraints {
                c.target = map[c.target].unwrap();
                match &mut c.rhs {
                    Rhs::Min(terms) => terms.iter_mut().for_each(|t| t.reindex(&map)),
                    Rhs::PriorityHigh { low, own, companions } => {
                        *low = map[*low].unwrap();
                        own.reindex(&map);
                        companions.iter_mut().for_each(|t| t.reindex(&map));
                    }
                }
            }
        }
    }
}

impl fmt::Display for GermSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            let lhs = &self.unknowns[c.target].id;
            match &c.rhs {
                Rhs::Min(terms) => {
                    let parts: Vec<String> = terms.iter().map(|t| t.render(&self.unknowns)).collect();
                    writeln!(f, "{lhs} = {}", parts.join(" ∧ "))?;
                }
                Rhs::PriorityHigh { low, own, companions } => {
                    let comp: Vec<String> = companions.iter().map(|t| t.render(&self.unknowns)).collect();
                    let comp = if comp.is_empty() { "TOP".to_owned() } else { comp.join(" ∧ ") };
                    writeln!(
                        f,
                        "{lhs} = {} ∧ {comp}  if ρ({}) = 0, else {comp}",
                        own.render(&self.unknowns),
                        self.unknowns[*low].id
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Builds the germ system of a validated net. Unknowns are the places in
/// net order followed by the transitions.
pub fn build_system(net: &PetriNet) -> GermSystem {
    let np = net.place_count();
    let mut unknowns: Vec<Unknown> = net
        .places()
        .iter()
        .map(|p| Unknown {
            id: p.id.0.clone(),
            kind: UnknownKind::Place,
        })
        .collect();
    unknowns.extend(net.transitions().iter().map(|q| Unknown {
        id: q.id.0.clone(),
        kind: UnknownKind::Transition,
    }));
    let tau = |p: usize| net.places()[p].holding_time.clone();
    let delayed = |p: usize| GermExpr::shifted(p, tau(p));

    let mut constraints = Vec::new();
    for (p, place) in net.places().iter().enumerate() {
        let expr = net
            .place_inputs(p)
            .iter()
            .fold(GermExpr::constant(place.initial_marking.clone()), |e, &q| {
                e.plus(np + q, Rational::one(), Rational::zero())
            });
        constraints.push(Constraint {
            kind: ConstraintKind::PlaceBalance,
            target: p,
            rhs: Rhs::Min(vec![expr]),
        });
    }
    for q in 0..net.transition_count() {
        let (kind, rhs) = match net.transition_kind(q) {
            TransitionKind::Routed { place, prob } => {
                (ConstraintKind::ConflictRouting, Rhs::Min(vec![delayed(*place).scaled(prob)]))
            }
            TransitionKind::Sync => (
                ConstraintKind::SyncMin,
                Rhs::Min(net.transition_inputs(q).iter().map(|&p| delayed(p)).collect()),
            ),
            TransitionKind::PriorityLow {
                place,
                sibling,
                companions,
            } => {
                let own = delayed(*place).plus(np + sibling, -Rational::one(), Rational::zero());
                let terms = std::iter::once(own).chain(companions.iter().map(|&r| delayed(r))).collect();
                (ConstraintKind::PriorityLowMin, Rhs::Min(terms))
            }
            TransitionKind::PriorityHigh {
                place,
                sibling,
                companions,
            } => (
                ConstraintKind::PriorityHighMin,
                Rhs::PriorityHigh {
                    low: np + sibling,
                    own: delayed(*place).plus(np + sibling, -Rational::one(), Rational::zero()),
                    companions: companions.iter().map(|&r| delayed(r)).collect(),
                },
            ),
        };
        constraints.push(Constraint {
            kind,
            target: np + q,
            rhs,
        });
    }
    GermSystem { unknowns, constraints }
}
