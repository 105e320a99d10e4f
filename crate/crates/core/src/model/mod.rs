//! Timed Petri nets with free-choice and priority routing.
//!
//! A [`NetDescription`] is the raw, unchecked form (what a file holds). A
//! [`PetriNet`] is only obtainable through validation and additionally
//! carries the structural classification every downstream module relies on:
//! each place is *simple* (at most one output), *conflict* (free choice with
//! several outputs) or *priority* (exactly two outputs, tagged high/low).

mod format;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::rational::{rational_gcd, steps_of, Rational};

pub use format::{load, load_str, parse_description, save, LoadError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlaceId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionId(pub String);

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlaceId {
    fn from(s: &str) -> Self {
        PlaceId(s.to_owned())
    }
}

impl From<&str> for TransitionId {
    fn from(s: &str) -> Self {
        TransitionId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: PlaceId,
    pub holding_time: Rational,
    /// Tokens present at time zero. Integral for token-level and stochastic
    /// runs; fluid and germ analyses accept any non-negative rational.
    pub initial_marking: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: TransitionId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorityTag {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arc {
    Input {
        place: PlaceId,
        transition: TransitionId,
        priority: Option<PriorityTag>,
    },
    Output {
        transition: TransitionId,
        place: PlaceId,
    },
}

/// Routing probabilities `π_qp` per conflict place.
pub type RoutingTable = BTreeMap<PlaceId, BTreeMap<TransitionId, Rational>>;

/// Unvalidated net, as read from a file or assembled by hand.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetDescription {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
    pub routing: RoutingTable,
}

impl NetDescription {
    pub fn place(&mut self, id: &str, holding_time: Rational, initial_marking: Rational) -> &mut Self {
        self.places.push(Place {
            id: id.into(),
            holding_time,
            initial_marking,
        });
        self
    }

    pub fn transition(&mut self, id: &str) -> &mut Self {
        self.transitions.push(Transition { id: id.into() });
        self
    }

    /// Place → transition arc.
    pub fn input(&mut self, place: &str, transition: &str) -> &mut Self {
        self.arcs.push(Arc::Input {
            place: place.into(),
            transition: transition.into(),
            priority: None,
        });
        self
    }

    pub fn priority_input(&mut self, place: &str, transition: &str, tag: PriorityTag) -> &mut Self {
        self.arcs.push(Arc::Input {
            place: place.into(),
            transition: transition.into(),
            priority: Some(tag),
        });
        self
    }

    /// Transition → place arc.
    pub fn output(&mut self, transition: &str, place: &str) -> &mut Self {
        self.arcs.push(Arc::Output {
            transition: transition.into(),
            place: place.into(),
        });
        self
    }

    pub fn route(&mut self, place: &str, probs: &[(&str, Rational)]) -> &mut Self {
        self.routing.insert(
            place.into(),
            probs.iter().map(|(q, p)| ((*q).into(), p.clone())).collect(),
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("empty identifier")]
    EmptyId,
    #[error("arc {from} -> {to} does not connect a place and a transition of the net")]
    DanglingArc { from: String, to: String },
    #[error("arc {from} -> {to} appears more than once")]
    DuplicateArc { from: String, to: String },
    #[error("place {0}: holding time must be positive")]
    NonPositiveHoldingTime(PlaceId),
    #[error("place {0}: initial marking must be non-negative")]
    NegativeMarking(PlaceId),
    #[error("priority place {place} has {outputs} output transitions, expected exactly 2")]
    PriorityArity { place: PlaceId, outputs: usize },
    #[error("priority place {place}: {reason}")]
    PriorityTags { place: PlaceId, reason: String },
    #[error("transition {0} has more than one priority place upstream")]
    DoublePriorityUpstream(TransitionId),
    #[error("routing at place {place}: {reason}")]
    RoutingNotStochastic { place: PlaceId, reason: String },
    #[error("place {place} is neither free choice nor priority: {reason}")]
    UnclassifiablePlace { place: PlaceId, reason: String },
    #[error("transition {0} has no upstream place")]
    SourceTransition(TransitionId),
}

/// All structural violations found in one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceClass {
    /// Free choice with at most one output transition.
    Simple,
    /// Free choice with several outputs, each having this place as sole input.
    Conflict,
    Priority { high: usize, low: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionKind {
    /// Every upstream place has this transition as unique output.
    Sync,
    /// Sole output share of a conflict place.
    Routed { place: usize, prob: Rational },
    PriorityHigh { place: usize, sibling: usize, companions: Vec<usize> },
    PriorityLow { place: usize, sibling: usize, companions: Vec<usize> },
}

/// Partition of places and transitions produced by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationReport {
    pub simple: Vec<PlaceId>,
    pub conflict: Vec<PlaceId>,
    pub priority: Vec<PlaceId>,
    pub sync: Vec<TransitionId>,
    /// `(place, high, low)` triples.
    pub priority_pairs: Vec<(PlaceId, TransitionId, TransitionId)>,
}

impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(items: &[T]) -> String {
            items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
        }
        writeln!(f, "simple places:   {}", join(&self.simple))?;
        writeln!(f, "conflict places: {}", join(&self.conflict))?;
        writeln!(f, "priority places: {}", join(&self.priority))?;
        writeln!(f, "sync transitions: {}", join(&self.sync))?;
        for (p, hi, lo) in &self.priority_pairs {
            writeln!(f, "priority {p}: {hi} (high) over {lo} (low)")?;
        }
        Ok(())
    }
}

/// Validated net with index-based adjacency.
#[derive(Debug, Clone)]
pub struct PetriNet {
    description: NetDescription,
    place_index: HashMap<PlaceId, usize>,
    transition_index: HashMap<TransitionId, usize>,
    place_inputs: Vec<Vec<usize>>,
    place_outputs: Vec<Vec<usize>>,
    transition_inputs: Vec<Vec<usize>>,
    transition_outputs: Vec<Vec<usize>>,
    place_class: Vec<PlaceClass>,
    transition_kind: Vec<TransitionKind>,
}

impl PartialEq for PetriNet {
    fn eq(&self, other: &Self) -> bool {
        self.description == other.description
    }
}

impl PetriNet {
    pub fn new(description: NetDescription) -> Result<Self, ValidationErrors> {
        analyze(description)
    }

    pub fn description(&self) -> &NetDescription {
        &self.description
    }

    pub fn places(&self) -> &[Place] {
        &self.description.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.description.transitions
    }

    pub fn place_count(&self) -> usize {
        self.description.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.description.transitions.len()
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_index.get(&PlaceId(id.to_owned())).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transition_index.get(&TransitionId(id.to_owned())).copied()
    }

    pub fn place_inputs(&self, p: usize) -> &[usize] {
        &self.place_inputs[p]
    }

    pub fn place_outputs(&self, p: usize) -> &[usize] {
        &self.place_outputs[p]
    }

    pub fn transition_inputs(&self, q: usize) -> &[usize] {
        &self.transition_inputs[q]
    }

    pub fn transition_outputs(&self, q: usize) -> &[usize] {
        &self.transition_outputs[q]
    }

    pub fn place_class(&self, p: usize) -> &PlaceClass {
        &self.place_class[p]
    }

    pub fn transition_kind(&self, q: usize) -> &TransitionKind {
        &self.transition_kind[q]
    }

    pub fn report(&self) -> ClassificationReport {
        let places = &self.description.places;
        let transitions = &self.description.transitions;
        let mut report = ClassificationReport {
            simple: vec![],
            conflict: vec![],
            priority: vec![],
            sync: vec![],
            priority_pairs: vec![],
        };
        for (p, class) in self.place_class.iter().enumerate() {
            let id = places[p].id.clone();
            match class {
                PlaceClass::Simple => report.simple.push(id),
                PlaceClass::Conflict => report.conflict.push(id),
                PlaceClass::Priority { high, low } => {
                    report.priority_pairs.push((
                        id.clone(),
                        transitions[*high].id.clone(),
                        transitions[*low].id.clone(),
                    ));
                    report.priority.push(id);
                }
            }
        }
        for (q, kind) in self.transition_kind.iter().enumerate() {
            if *kind == TransitionKind::Sync {
                report.sync.push(transitions[q].id.clone());
            }
        }
        report
    }

    /// Greatest `δ` such that every holding time lies in `δℕ`; `1` for a net
    /// without places.
    pub fn grid_step(&self) -> Rational {
        rational_gcd(self.places().iter().map(|p| &p.holding_time)).unwrap_or_else(Rational::one)
    }

    /// `true` when every holding time is a positive multiple of `delta`.
    pub fn accepts_step(&self, delta: &Rational) -> bool {
        delta.is_positive()
            && self
                .places()
                .iter()
                .all(|p| steps_of(&p.holding_time, delta).is_some_and(|k| k > 0))
    }

    pub fn has_integral_marking(&self) -> bool {
        self.places().iter().all(|p| p.initial_marking.is_integer())
    }

    /// Same structure with every initial marking multiplied by `factor`.
    pub fn scale_marking(&self, factor: &Rational) -> Result<PetriNet, ValidationErrors> {
        let mut d = self.description.clone();
        for p in &mut d.places {
            p.initial_marking = &p.initial_marking * factor;
        }
        PetriNet::new(d)
    }
}

/// Structural check of a description. Pure: the same description always
/// yields the same report or the same error list.
pub fn validate(description: &NetDescription) -> Result<ClassificationReport, ValidationErrors> {
    analyze(description.clone()).map(|net| net.report())
}

fn analyze(description: NetDescription) -> Result<PetriNet, ValidationErrors> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut place_index = HashMap::new();
    let mut transition_index = HashMap::new();

    for (i, p) in description.places.iter().enumerate() {
        if p.id.0.is_empty() {
            errors.push(ModelError::EmptyId);
        } else if !seen.insert(p.id.0.clone()) {
            errors.push(ModelError::DuplicateId(p.id.0.clone()));
        } else {
            place_index.insert(p.id.clone(), i);
        }
        if !p.holding_time.is_positive() {
            errors.push(ModelError::NonPositiveHoldingTime(p.id.clone()));
        }
        if p.initial_marking.is_negative() {
            errors.push(ModelError::NegativeMarking(p.id.clone()));
        }
    }
    for (i, t) in description.transitions.iter().enumerate() {
        if t.id.0.is_empty() {
            errors.push(ModelError::EmptyId);
        } else if !seen.insert(t.id.0.clone()) {
            errors.push(ModelError::DuplicateId(t.id.0.clone()));
        } else {
            transition_index.insert(t.id.clone(), i);
        }
    }

    let np = description.places.len();
    let nq = description.transitions.len();
    let mut place_inputs = vec![vec![]; np];
    let mut place_outputs = vec![vec![]; np];
    let mut transition_inputs = vec![vec![]; nq];
    let mut transition_outputs = vec![vec![]; nq];
    // (place, transition) -> tag, for input arcs.
    let mut tags: HashMap<(usize, usize), Option<PriorityTag>> = HashMap::new();
    let mut arcs_seen = HashSet::new();

    for arc in &description.arcs {
        let (from, to) = match arc {
            Arc::Input { place, transition, .. } => (place.0.clone(), transition.0.clone()),
            Arc::Output { transition, place } => (transition.0.clone(), place.0.clone()),
        };
        if !arcs_seen.insert((from.clone(), to.clone())) {
            errors.push(ModelError::DuplicateArc { from, to });
            continue;
        }
        match arc {
            Arc::Input {
                place,
                transition,
                priority,
            } => match (place_index.get(place), transition_index.get(transition)) {
                (Some(&p), Some(&q)) => {
                    place_outputs[p].push(q);
                    transition_inputs[q].push(p);
                    tags.insert((p, q), *priority);
                }
                _ => errors.push(ModelError::DanglingArc { from, to }),
            },
            Arc::Output { transition, place } => {
                match (transition_index.get(transition), place_index.get(place)) {
                    (Some(&q), Some(&p)) => {
                        transition_outputs[q].push(p);
                        place_inputs[p].push(q);
                    }
                    _ => errors.push(ModelError::DanglingArc { from, to }),
                }
            }
        }
    }

    // Priority places are exactly those carrying tags on their output arcs.
    let mut place_class = vec![PlaceClass::Simple; np];
    let mut is_priority = vec![false; np];
    for p in 0..np {
        let outs = &place_outputs[p];
        let tagged: Vec<(usize, PriorityTag)> = outs
            .iter()
            .filter_map(|&q| tags[&(p, q)].map(|t| (q, t)))
            .collect();
        if tagged.is_empty() {
            continue;
        }
        is_priority[p] = true;
        let pid = description.places[p].id.clone();
        if outs.len() != 2 {
            errors.push(ModelError::PriorityArity {
                place: pid,
                outputs: outs.len(),
            });
            continue;
        }
        let high: Vec<usize> = tagged.iter().filter(|(_, t)| *t == PriorityTag::High).map(|(q, _)| *q).collect();
        let low: Vec<usize> = tagged.iter().filter(|(_, t)| *t == PriorityTag::Low).map(|(q, _)| *q).collect();
        if high.len() != 1 || low.len() != 1 {
            errors.push(ModelError::PriorityTags {
                place: pid,
                reason: "needs exactly one `high` and one `low` output arc".into(),
            });
            continue;
        }
        place_class[p] = PlaceClass::Priority {
            high: high[0],
            low: low[0],
        };
    }

    for q in 0..nq {
        let upstream_priority = transition_inputs[q].iter().filter(|&&p| is_priority[p]).count();
        if upstream_priority > 1 {
            errors.push(ModelError::DoublePriorityUpstream(description.transitions[q].id.clone()));
        }
        if transition_inputs[q].is_empty() {
            errors.push(ModelError::SourceTransition(description.transitions[q].id.clone()));
        }
    }

    for p in 0..np {
        if is_priority[p] {
            continue;
        }
        let outs = &place_outputs[p];
        if outs.len() <= 1 {
            continue;
        }
        let pid = description.places[p].id.clone();
        if let Some(&q) = outs.iter().find(|&&q| transition_inputs[q] != [p]) {
            let qid = &description.transitions[q].id;
            let reason = if transition_inputs[q].iter().any(|&r| is_priority[r]) {
                format!("shares output {qid} with a priority place but has several outputs")
            } else {
                format!("output {qid} has other upstream places")
            };
            errors.push(ModelError::UnclassifiablePlace { place: pid, reason });
        } else {
            place_class[p] = PlaceClass::Conflict;
        }
    }

    // Routing: mandatory for conflict places, must be a probability vector
    // over exactly p_out. A single-output place may carry the trivial `{q: 1}`.
    for (pid, probs) in &description.routing {
        let Some(&p) = place_index.get(pid) else {
            errors.push(ModelError::RoutingNotStochastic {
                place: pid.clone(),
                reason: "unknown place".into(),
            });
            continue;
        };
        if place_class[p] != PlaceClass::Conflict && !(place_outputs[p].len() == 1 && !is_priority[p]) {
            errors.push(ModelError::RoutingNotStochastic {
                place: pid.clone(),
                reason: "routing given for a place that is not a conflict place".into(),
            });
            continue;
        }
        let outs: HashSet<&TransitionId> = place_outputs[p].iter().map(|&q| &description.transitions[q].id).collect();
        let keys: HashSet<&TransitionId> = probs.keys().collect();
        if outs != keys {
            errors.push(ModelError::RoutingNotStochastic {
                place: pid.clone(),
                reason: "probabilities must cover exactly the output transitions".into(),
            });
            continue;
        }
        if probs.values().any(|v| !v.is_positive()) {
            errors.push(ModelError::RoutingNotStochastic {
                place: pid.clone(),
                reason: "probabilities must be positive".into(),
            });
            continue;
        }
        let sum: Rational = probs.values().sum();
        if !sum.is_one() {
            errors.push(ModelError::RoutingNotStochastic {
                place: pid.clone(),
                reason: format!("probabilities sum to {}", crate::rational::format_rational(&sum)),
            });
        }
    }
    for p in 0..np {
        if place_class[p] == PlaceClass::Conflict && !description.routing.contains_key(&description.places[p].id) {
            errors.push(ModelError::RoutingNotStochastic {
                place: description.places[p].id.clone(),
                reason: "missing routing probabilities".into(),
            });
        }
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let mut transition_kind = vec![TransitionKind::Sync; nq];
    for p in 0..np {
        match &place_class[p] {
            PlaceClass::Simple => {}
            PlaceClass::Conflict => {
                let probs = &description.routing[&description.places[p].id];
                for &q in &place_outputs[p] {
                    transition_kind[q] = TransitionKind::Routed {
                        place: p,
                        prob: probs[&description.transitions[q].id].clone(),
                    };
                }
            }
            &PlaceClass::Priority { high, low } => {
                let companions = |q: usize| -> Vec<usize> {
                    transition_inputs[q].iter().copied().filter(|&r| r != p).collect()
                };
                transition_kind[high] = TransitionKind::PriorityHigh {
                    place: p,
                    sibling: low,
                    companions: companions(high),
                };
                transition_kind[low] = TransitionKind::PriorityLow {
                    place: p,
                    sibling: high,
                    companions: companions(low),
                };
            }
        }
    }

    Ok(PetriNet {
        description,
        place_index,
        transition_index,
        place_inputs,
        place_outputs,
        transition_inputs,
        transition_outputs,
        place_class,
        transition_kind,
    })
}
