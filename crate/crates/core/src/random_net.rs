//! Random valid nets for property tests and fuzzing of the simulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Arc, NetDescription, PetriNet, PriorityTag};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone)]
pub struct RandomNetConfig {
    pub max_places: usize,
    pub max_holding: i64,
    pub max_marking: i64,
}

impl Default for RandomNetConfig {
    fn default() -> Self {
        RandomNetConfig {
            max_places: 6,
            max_holding: 5,
            max_marking: 3,
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Simple,
    Conflict,
    Priority,
}

/// A net that is valid by construction, with holding times on the grid `ℕ`.
pub fn random_net(seed: u64, config: &RandomNetConfig) -> PetriNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=config.max_places.max(2));
    let kinds: Vec<Kind> = (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0..=2 => Kind::Conflict,
            3..=4 => Kind::Priority,
            _ => Kind::Simple,
        })
        .collect();

    let mut d = NetDescription::default();
    for i in 0..n {
        let tau = int(rng.gen_range(1..=config.max_holding));
        let m = int(rng.gen_range(0..=config.max_marking));
        d.place(&format!("p{i}"), tau, m);
    }

    // Transitions that simple places may feed: not routed ones.
    let mut open: Vec<String> = Vec::new();
    let mut all: Vec<String> = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let p = format!("p{i}");
        match kind {
            Kind::Conflict => {
                let k = rng.gen_range(2..=3);
                let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
                let total: i64 = weights.iter().sum();
                let mut probs: Vec<(String, Rational)> = Vec::new();
                for (j, w) in weights.iter().enumerate() {
                    let q = format!("r{i}_{j}");
                    d.transition(&q).input(&p, &q);
                    all.push(q.clone());
                    probs.push((q, ratio(*w, total)));
                }
                let pairs: Vec<(&str, Rational)> = probs.iter().map(|(q, r)| (q.as_str(), r.clone())).collect();
                d.route(&p, &pairs);
            }
            Kind::Priority => {
                let (hi, lo) = (format!("h{i}"), format!("l{i}"));
                d.transition(&hi)
                    .transition(&lo)
                    .priority_input(&p, &hi, PriorityTag::High)
                    .priority_input(&p, &lo, PriorityTag::Low);
                open.push(hi.clone());
                open.push(lo.clone());
                all.push(hi);
                all.push(lo);
            }
            Kind::Simple => {}
        }
    }
    for (i, kind) in kinds.iter().enumerate() {
        if !matches!(kind, Kind::Simple) {
            continue;
        }
        let p = format!("p{i}");
        let roll = rng.gen_range(0..10);
        if roll == 0 {
            continue;
        }
        if roll <= 5 || open.is_empty() {
            let q = format!("s{i}");
            d.transition(&q).input(&p, &q);
            open.push(q.clone());
            all.push(q);
        } else {
            let q = open[rng.gen_range(0..open.len())].clone();
            d.input(&p, &q);
        }
    }
    // At most as many outputs as inputs keeps the token count bounded.
    for q in &all {
        let inputs = d
            .arcs
            .iter()
            .filter(|a| matches!(a, Arc::Input { transition, .. } if transition.0 == *q))
            .count();
        let outs = rng.gen_range(1..=inputs.clamp(1, 2));
        let mut chosen = Vec::new();
        for _ in 0..outs {
            let target = rng.gen_range(0..n);
            if !chosen.contains(&target) {
                chosen.push(target);
                d.output(q, &format!("p{target}"));
            }
        }
    }
    PetriNet::new(d).expect("generated nets are valid by construction")
}
