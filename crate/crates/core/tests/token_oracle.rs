use tpn::dynamics::equations::{check, ConflictForm, Family};
use tpn::dynamics::{simulate_stochastic, Recording, RoutingStream};
use tpn::model::{NetDescription, PetriNet, TransitionKind};
use tpn::random_net::{random_net, RandomNetConfig};
use tpn::rational::{int, ratio};
use tpn::token::{record, trace_counters, TokenAge, TokenSimulator};

#[test]
fn random_nets_satisfy_counter_equations() {
    let config = RandomNetConfig::default();
    for seed in 0..200 {
        let net = random_net(seed, &config);
        let traj = trace_counters(&net, &int(1), 1000, RoutingStream::new(seed)).unwrap();
        let report = check(&net, &traj.to_rational(), ConflictForm::Conserved);
        assert!(report.exact(), "seed {seed}: {}", report.equalities[0]);
    }
}

#[test]
fn token_and_counter_simulators_agree() {
    let config = RandomNetConfig::default();
    for seed in 0..200 {
        let net = random_net(seed, &config);
        let tokens = trace_counters(&net, &int(1), 1000, RoutingStream::new(seed ^ 0x5a)).unwrap();
        let counters = simulate_stochastic(&net, &int(1), 1000, seed ^ 0x5a, &Recording::Every(1)).unwrap();
        assert_eq!(tokens, counters, "seed {seed}");
    }
}

#[test]
fn steps_end_in_earliest_behavior() {
    let config = RandomNetConfig::default();
    for seed in 0..50 {
        let net = random_net(seed, &config);
        let mut sim = TokenSimulator::new(&net, &int(1), RoutingStream::new(seed)).unwrap();
        for _ in 0..200 {
            sim.step();
            assert!(sim.was_saturated(), "seed {seed}");
            // A token older than its holding time may only wait if no
            // downstream transition can take it.
            for p in 0..net.place_count() {
                let lag = sim.holding_steps(p);
                let overdue = sim
                    .ages_after_step(p)
                    .into_iter()
                    .any(|a| a > TokenAge::Steps(lag));
                if overdue {
                    assert!(net.place_outputs(p).iter().all(|&q| !matches!(net.transition_kind(q), TransitionKind::Routed { .. })));
                }
            }
        }
    }
}

fn two_independent_chains() -> PetriNet {
    let mut d = NetDescription::default();
    d.place("a0", int(1), int(2))
        .place("a1", int(2), int(0))
        .place("b0", int(1), int(1))
        .place("b1", int(3), int(0))
        .transition("fa")
        .transition("ga")
        .transition("fb")
        .transition("gb");
    d.input("a0", "fa").output("fa", "a1").input("a1", "ga").output("ga", "a0");
    d.input("b0", "fb").output("fb", "b1").input("b1", "gb").output("gb", "b0");
    PetriNet::new(d).unwrap()
}

#[test]
fn firing_order_of_independent_transitions_is_irrelevant() {
    let net = two_independent_chains();
    let forward = {
        let mut sim = TokenSimulator::new(&net, &int(1), RoutingStream::new(0)).unwrap();
        record(&mut sim, 50)
    };
    let backward = {
        let mut sim = TokenSimulator::new(&net, &int(1), RoutingStream::new(0))
            .unwrap()
            .with_order(vec![3, 2, 1, 0]);
        record(&mut sim, 50)
    };
    assert_eq!(forward, backward);
}

#[test]
fn delayed_firing_relaxes_equations_to_inequalities() {
    let net = two_independent_chains();
    let mut sim = TokenSimulator::new(&net, &int(1), RoutingStream::new(0)).unwrap();
    let fa = net.transition_index("fa").unwrap();
    sim.suppress(0, fa);
    let traj = record(&mut sim, 30);
    let report = check(&net, &traj.to_rational(), ConflictForm::Conserved);
    assert!(report.inequalities.is_empty());
    assert!(report.equalities.iter().any(|v| v.family == Family::Sync && v.step == 0));
}

#[test]
fn priority_and_conflict_on_fractional_step() {
    let config = RandomNetConfig::default();
    let net = random_net(17, &config);
    let half = ratio(1, 2);
    let a = trace_counters(&net, &half, 400, RoutingStream::new(1)).unwrap();
    let b = simulate_stochastic(&net, &half, 400, 1, &Recording::Every(1)).unwrap();
    assert_eq!(a, b);
}
