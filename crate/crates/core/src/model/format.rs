//! JSON net files.
//!
//! ```json
//! {
//!   "places": [{"id": "p", "holding_time": "3/2", "initial_marking": 1}],
//!   "transitions": [{"id": "q"}],
//!   "arcs": [{"from": "p", "to": "q", "priority": "high"}],
//!   "routing": [{"place": "p", "probs": {"q": "1"}}]
//! }
//! ```
//!
//! A place without `holding_time` gets the grid step of the explicit holding
//! times; a file where no place has one is rejected. `initial_marking`
//! defaults to zero; `transitions` and `arcs` default to empty. Unknown fields
//! are errors.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Arc, NetDescription, PetriNet, Place, PlaceId, PriorityTag, Transition, TransitionId, ValidationErrors};
use crate::rational::{rational_gcd, serde_rational, serde_rational_opt, Rational};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid net:\n{0}")]
    Invalid(ValidationErrors),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    places: Vec<PlaceEntry>,
    #[serde(default)]
    transitions: Vec<TransitionEntry>,
    #[serde(default)]
    arcs: Vec<ArcEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    routing: Vec<RoutingEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceEntry {
    id: String,
    #[serde(default, with = "serde_rational_opt", skip_serializing_if = "Option::is_none")]
    holding_time: Option<Rational>,
    #[serde(default, with = "serde_rational_opt", skip_serializing_if = "Option::is_none")]
    initial_marking: Option<Rational>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcEntry {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority: Option<PriorityTag>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutingEntry {
    place: String,
    probs: BTreeMap<String, Prob>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct Prob(#[serde(with = "serde_rational")] Rational);

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a net description without validating it.
pub fn parse_description(text: &str) -> Result<NetDescription, LoadError> {
    let file: NetFile = serde_json::from_str(text).map_err(|e| parse_error(e.line(), e.column(), e.to_string()))?;

    let explicit: Vec<&Rational> = file.places.iter().filter_map(|p| p.holding_time.as_ref()).collect();
    let default_holding = if explicit.len() < file.places.len() {
        let step = rational_gcd(explicit.iter().copied())
            .ok_or_else(|| parse_error(0, 0, "no place has an explicit holding_time, the default step is unknown"))?;
        Some(step)
    } else {
        None
    };

    let places: Vec<Place> = file
        .places
        .into_iter()
        .map(|p| Place {
            id: PlaceId(p.id),
            holding_time: p.holding_time.or_else(|| default_holding.clone()).expect("default computed"),
            initial_marking: p.initial_marking.unwrap_or_default(),
        })
        .collect();
    let place_ids: HashSet<&str> = places.iter().map(|p| p.id.0.as_str()).collect();
    let transition_ids: HashSet<&str> = file.transitions.iter().map(|t| t.id.as_str()).collect();

    let mut arcs = Vec::with_capacity(file.arcs.len());
    for a in file.arcs {
        let from_transition = transition_ids.contains(a.from.as_str()) && !place_ids.contains(a.from.as_str());
        if from_transition {
            if a.priority.is_some() {
                return Err(parse_error(
                    0,
                    0,
                    format!("arc {} -> {}: priority is only allowed on place -> transition arcs", a.from, a.to),
                ));
            }
            arcs.push(Arc::Output {
                transition: TransitionId(a.from),
                place: PlaceId(a.to),
            });
        } else {
            // Unknown endpoints fall through here and surface as DanglingArc.
            arcs.push(Arc::Input {
                place: PlaceId(a.from),
                transition: TransitionId(a.to),
                priority: a.priority,
            });
        }
    }

    let mut routing = BTreeMap::new();
    for r in file.routing {
        let probs = r.probs.into_iter().map(|(q, p)| (TransitionId(q), p.0)).collect();
        if routing.insert(PlaceId(r.place.clone()), probs).is_some() {
            return Err(parse_error(0, 0, format!("duplicate routing entry for place {}", r.place)));
        }
    }

    Ok(NetDescription {
        places,
        transitions: file.transitions.into_iter().map(|t| Transition { id: TransitionId(t.id) }).collect(),
        arcs,
        routing,
    })
}

/// Parses and validates.
pub fn load_str(text: &str) -> Result<PetriNet, LoadError> {
    let description = parse_description(text)?;
    PetriNet::new(description).map_err(LoadError::Invalid)
}

pub fn load(path: impl AsRef<Path>) -> Result<PetriNet, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text)
}

/// Pretty JSON with every field explicit.
pub fn save(net: &PetriNet) -> String {
    let d = net.description();
    let file = NetFile {
        places: d
            .places
            .iter()
            .map(|p| PlaceEntry {
                id: p.id.0.clone(),
                holding_time: Some(p.holding_time.clone()),
                initial_marking: Some(p.initial_marking.clone()),
            })
            .collect(),
        transitions: d.transitions.iter().map(|t| TransitionEntry { id: t.id.0.clone() }).collect(),
        arcs: d
            .arcs
            .iter()
            .map(|a| match a {
                Arc::Input {
                    place,
                    transition,
                    priority,
                } => ArcEntry {
                    from: place.0.clone(),
                    to: transition.0.clone(),
                    priority: *priority,
                },
                Arc::Output { transition, place } => ArcEntry {
                    from: transition.0.clone(),
                    to: place.0.clone(),
                    priority: None,
                },
            })
            .collect(),
        routing: d
            .routing
            .iter()
            .map(|(p, probs)| RoutingEntry {
                place: p.0.clone(),
                probs: probs.iter().map(|(q, v)| (q.0.clone(), Prob(v.clone()))).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("net serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelError;
    use crate::rational::{int, ratio};

    const CONFLICT: &str = r#"{
        "places": [{"id": "p", "holding_time": "3/2", "initial_marking": 2}, {"id": "r"}],
        "transitions": [{"id": "a"}, {"id": "b"}],
        "arcs": [{"from": "p", "to": "a"}, {"from": "p", "to": "b"}, {"from": "a", "to": "r"}],
        "routing": [{"place": "p", "probs": {"a": "1/3", "b": "2/3"}}]
    }"#;

    #[test]
    fn loads_with_defaults() {
        let net = load_str(CONFLICT).unwrap();
        assert_eq!(net.places()[0].holding_time, ratio(3, 2));
        assert_eq!(net.places()[1].holding_time, ratio(3, 2));
        assert_eq!(net.places()[1].initial_marking, int(0));
        assert_eq!(net.report().conflict, vec![PlaceId::from("p")]);
    }

    #[test]
    fn round_trips() {
        let net = load_str(CONFLICT).unwrap();
        assert_eq!(load_str(&save(&net)).unwrap(), net);
    }

    #[test]
    fn rejects_bad_probability_sum() {
        let text = CONFLICT.replace("2/3", "17/30");
        match load_str(&text) {
            Err(LoadError::Invalid(errs)) => {
                assert!(matches!(&errs.0[..], [ModelError::RoutingNotStochastic { .. }]))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_inputs_are_parse_errors() {
        assert!(matches!(load_str(""), Err(LoadError::Parse { .. })));
        assert!(matches!(load_str("{"), Err(LoadError::Parse { .. })));
        let unknown = CONFLICT.replace("\"routing\"", "\"colour\": 1, \"routing\"");
        assert!(matches!(load_str(&unknown), Err(LoadError::Parse { .. })));
        let bad_rat = CONFLICT.replace("3/2", "3/0");
        assert!(matches!(load_str(&bad_rat), Err(LoadError::Parse { .. })));
    }

    #[test]
    fn implicit_holding_time_needs_a_known_step() {
        let text = r#"{"places": [{"id": "p"}], "transitions": [], "arcs": []}"#;
        assert!(matches!(load_str(text), Err(LoadError::Parse { .. })));
    }

    #[test]
    fn priority_on_output_arc_is_rejected() {
        let text = CONFLICT.replace(r#"{"from": "a", "to": "r"}"#, r#"{"from": "a", "to": "r", "priority": "low"}"#);
        assert!(matches!(load_str(&text), Err(LoadError::Parse { .. })));
    }
}
