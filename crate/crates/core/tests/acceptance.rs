//! Acceptance criteria for the whole library, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are run unchanged and reported as
//! FAIL; the run only errors when a criterion outside that list fails, or
//! when a listed one starts passing (so the list cannot go stale).

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tpn::callcenter::{
    build_full_net, phase_table, reduced_system, simulate_reduced, CallCenterParams, Phase, ReducedCounter,
    ReducedDynamics, ReducedSimulator,
};
use tpn::dynamics::equations::{check, ConflictForm};
use tpn::dynamics::{simulate_fluid, simulate_stochastic, Recording, RoutingStream};
use tpn::random_net::{random_net, RandomNetConfig};
use tpn::rational::{int, ratio, Rational};
use tpn::solver::{build_system, round_trip_mismatches, solve_all, GermSystem};
use tpn::token::trace_counters;
use tpn::Germ;

const KNOWN_FAILURES: [u32; 3] = [5, 6, 7];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel_error(estimate: &Rational, rho: &Rational) -> f64 {
    ((estimate - rho) / rho).abs().to_f64().unwrap_or(f64::INFINITY)
}

fn set_a(n1: i64, n2: i64) -> CallCenterParams {
    CallCenterParams::set_a(int(n1), int(n2))
}

fn set_b(n1: i64, n2: i64) -> CallCenterParams {
    CallCenterParams::set_b(int(n1), int(n2))
}

fn distinct_rhos(sys: &GermSystem, ids: &[&str]) -> BTreeSet<Vec<Rational>> {
    solve_all(sys)
        .solutions
        .iter()
        .map(|s| ids.iter().map(|id| s.rho(sys, id).unwrap().clone()).collect())
        .collect()
}

fn random_germ(rng: &mut ChaCha8Rng) -> Germ {
    if rng.gen_ratio(1, 20) {
        return Germ::Top;
    }
    // Small ranges make ties in ρ frequent, which exercises the tie-break.
    let r = ratio(rng.gen_range(-6..=6), rng.gen_range(1..=3));
    let u = ratio(rng.gen_range(-20..=20), rng.gen_range(1..=4));
    Germ::new(r, u)
}

fn germ_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..10_000 {
        let (a, b, c) = (random_germ(&mut rng), random_germ(&mut rng), random_germ(&mut rng));
        let tau1 = ratio(rng.gen_range(0..=12), rng.gen_range(1..=4));
        let tau2 = ratio(rng.gen_range(0..=12), rng.gen_range(1..=4));
        let laws = [
            a.meet(&a) == a,
            a.meet(&b) == b.meet(&a),
            a.meet(&b).meet(&c) == a.meet(&b.meet(&c)),
            &(&a + &b) + &c == &a + &(&b + &c),
            &a + &b == &b + &a,
            &a + &Germ::zero() == a,
            a.neg().map_or(a.is_top(), |n| &a + &n == Germ::zero()),
            &a + &b.meet(&c) == (&a + &b).meet(&(&a + &c)),
            a.shift(&tau1).shift(&tau2) == a.shift(&(&tau1 + &tau2)),
            (&a + &b).shift(&tau1) == &a.shift(&tau1) + &b.shift(&tau1),
        ];
        failures += laws.iter().filter(|ok| !**ok).count();
    }
    Outcome::new(failures == 0, format!("10000 triples, {failures} law violations"))
}

fn token_oracle() -> Outcome {
    let config = RandomNetConfig::default();
    let mut residual_failures = 0;
    let mut mismatches = 0;
    for seed in 0..200 {
        let net = random_net(seed, &config);
        let tokens = trace_counters(&net, &int(1), 1000, RoutingStream::new(seed)).unwrap();
        if !check(&net, &tokens.to_rational(), ConflictForm::Conserved).exact() {
            residual_failures += 1;
        }
        let counters = simulate_stochastic(&net, &int(1), 1000, seed, &Recording::Every(1)).unwrap();
        if counters != tokens {
            mismatches += 1;
        }
    }
    Outcome::new(
        residual_failures == 0 && mismatches == 0,
        format!("200 nets: {residual_failures} with non-zero residual, {mismatches} token/counter mismatches"),
    )
}

fn table_exactness() -> Outcome {
    let ids = ["q1", "q5", "q6"];
    let mut disagreements = Vec::new();
    let mut solver_rhos = Vec::new();
    for quarter in 0..=48 {
        let params = CallCenterParams::set_a(int(9), ratio(quarter, 4));
        let table = phase_table(&params).unwrap();
        let expected: Vec<Rational> = table.rhos().into_iter().cloned().collect();
        let found = distinct_rhos(&reduced_system(&params), &ids);
        if found != BTreeSet::from([expected.clone()]) {
            disagreements.push(params.n2.to_string());
        }
        solver_rhos.push(expected);
    }
    // Kinks: grid points where the second difference of the solver
    // throughputs is non-zero.
    let kinks: Vec<Rational> = (1..48)
        .filter(|&i| (0..3).any(|j| &solver_rhos[i - 1][j] + &solver_rhos[i + 1][j] != &solver_rhos[i][j] * int(2)))
        .map(|i| ratio(i as i64, 4))
        .collect();
    let table = phase_table(&set_a(9, 7)).unwrap();
    let ok = disagreements.is_empty()
        && kinks == [int(6), int(8)]
        && table.r1 == ratio(2, 3)
        && table.r2 == ratio(8, 9);
    let kink_list: Vec<String> = kinks.iter().map(|k| k.to_string()).collect();
    Outcome::new(
        ok,
        format!(
            "49 points, {} disagreements, breakpoints at N2 = {}, r1 = {}, r2 = {}",
            disagreements.len(),
            kink_list.join(" and "),
            table.r1,
            table.r2
        ),
    )
}

fn reduction_consistency() -> Outcome {
    let delta = ratio(1, 4);
    let mut mismatches = Vec::new();
    let cases = [("A", set_a(9, 3)), ("A", set_a(9, 7)), ("A", set_a(9, 9)), ("B", set_b(9, 7))];
    for (name, params) in &cases {
        let net = build_full_net(params).unwrap();
        let full = simulate_fluid(&net, &delta, 1000, &Recording::Every(1)).unwrap();
        let reduced = simulate_reduced(params, &delta, 1000, &Recording::Every(1)).unwrap();
        for c in ReducedCounter::ALL {
            let q = full.transition_index(c.transition_id()).unwrap();
            let r = reduced.transition_index(c.transition_id()).unwrap();
            if !full.z_series(q).eq(reduced.z_series(r)) {
                mismatches.push(format!("{name}({}, {}) {}", params.n1, params.n2, c.transition_id()));
            }
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        format!("{} parameter points, 1001 steps at δ = 1/4, mismatches: {:?}", cases.len(), mismatches),
    )
}

/// Runs the reduced fluid dynamics at δ = 1 and returns the relative
/// errors of z_i(t)/t (`None` where ρ_i = 0) and whether z6 stayed zero.
fn fluid_errors(params: &CallCenterParams, horizon: u64) -> (Vec<Option<f64>>, bool) {
    let mut sim = ReducedSimulator::new(ReducedDynamics::new(params, &int(1)).unwrap());
    let mut z6_zero = true;
    for _ in 0..=horizon {
        sim.step();
        z6_zero &= sim.is_zero(ReducedCounter::Z6);
    }
    let t = Rational::from_integer(horizon.into());
    let table = phase_table(params).unwrap();
    let errors = ReducedCounter::ALL
        .iter()
        .zip(table.rhos())
        .map(|(&c, rho)| (!rho.is_zero()).then(|| rel_error(&(sim.value(c) / &t), rho)))
        .collect();
    (errors, z6_zero)
}

fn fmt_errors(errors: &[Option<f64>]) -> String {
    errors
        .iter()
        .map(|e| e.map_or("-".to_string(), |v| format!("{v:.2e}")))
        .collect::<Vec<_>>()
        .join("/")
}

fn fluid_convergence() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n2 in [3, 7, 9] {
        let params = set_a(9, n2);
        let (errors, z6_zero) = fluid_errors(&params, 100_000);
        let lower = phase_table(&params).unwrap().phase == Phase::Lower;
        let point_ok = errors.iter().flatten().all(|e| *e <= 1e-3) && (!lower || z6_zero);
        ok &= point_ok;
        parts.push(format!(
            "N2={n2} {} [{}]{}",
            if point_ok { "ok" } else { "out" },
            fmt_errors(&errors),
            if lower { format!(" z6≡0: {z6_zero}") } else { String::new() }
        ));
    }
    Outcome::new(ok, format!("relative errors z1/z5/z6 at t = 1e5, bound 1e-3: {}", parts.join("; ")))
}

fn non_convergence() -> Outcome {
    let (errors, _) = fluid_errors(&set_b(9, 7), 100_000);
    let max = errors.iter().flatten().cloned().fold(0.0, f64::max);
    Outcome::new(
        max >= 1e-2,
        format!("set B (9, 7) relative errors z1/z5/z6 [{}], max {max:.2e}, required ≥ 1e-2", fmt_errors(&errors)),
    )
}

fn stochastic_phases() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n2, bound) in [(3, 0.02), (7, 0.10), (10, 0.02)] {
        let start = Instant::now();
        let params = set_a(9, n2);
        let net = build_full_net(&params).unwrap();
        let traj = simulate_stochastic(&net, &ratio(1, 4), 1_000_000, 42, &Recording::Final)
            .unwrap()
            .to_rational();
        let t = Rational::from_integer(1_000_000.into()) * &traj.delta;
        let table = phase_table(&params).unwrap();
        let errors: Vec<Option<f64>> = ReducedCounter::ALL
            .iter()
            .zip(table.rhos())
            .map(|(c, rho)| {
                let q = traj.transition_index(c.transition_id()).unwrap();
                (!rho.is_zero()).then(|| rel_error(&(&traj.final_z()[q] / &t), rho))
            })
            .collect();
        let elapsed = start.elapsed();
        let point_ok = errors.iter().flatten().all(|e| *e <= bound) && elapsed < Duration::from_secs(60);
        ok &= point_ok;
        parts.push(format!(
            "N2={n2} ({}) {} [{}] bound {bound} in {:.1}s",
            table.phase,
            if point_ok { "ok" } else { "out" },
            fmt_errors(&errors),
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(ok, format!("seed 42, 1e6 steps of 1/4: {}", parts.join("; ")))
}

fn round_trip() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut nets: Vec<(String, tpn::PetriNet, Rational)> = Vec::new();
    for (name, params) in [("A3", set_a(9, 3)), ("A7", set_a(9, 7)), ("A9", set_a(9, 9)), ("B7", set_b(9, 7))] {
        nets.push((name.into(), build_full_net(&params).unwrap(), ratio(1, 4)));
    }
    let config = RandomNetConfig::default();
    for seed in 0..200 {
        nets.push((format!("random {seed}"), random_net(seed, &config), int(1)));
    }
    for (name, net, delta) in &nets {
        let sys = build_system(net);
        if sys.selection_count() > 1 << 14 {
            continue;
        }
        for solution in solve_all(&sys).solutions {
            checked += 1;
            let bad = round_trip_mismatches(net, &solution, delta, 1000).unwrap();
            if !bad.is_empty() {
                failures.push(format!("{name} solution {}", solution.selection_index));
            }
        }
    }
    Outcome::new(
        failures.is_empty() && checked > 0,
        format!("{checked} solutions checked one step at t = 1000δ, {} not fixed: {:?}", failures.len(), failures),
    )
}

fn homogeneity() -> Outcome {
    let lambdas = [ratio(1, 2), int(2), int(3)];
    let mut failures = Vec::new();
    let mut systems = 0;
    for lambda in &lambdas {
        for n2 in 0..=12 {
            for params in [set_a(9, n2), set_b(9, n2), set_a(5, n2)] {
                let scaled = params.scaled(lambda);
                let (t, s) = (phase_table(&params).unwrap(), phase_table(&scaled).unwrap());
                if t.phase != s.phase || (0..3).any(|i| t.rhos()[i] * lambda != *s.rhos()[i]) {
                    failures.push(format!("phase table λ={lambda} N2={n2}"));
                }
                let base = solve_all(&reduced_system(&params));
                let big = solve_all(&reduced_system(&scaled));
                systems += 1;
                if !scales(&base.solutions, &big.solutions, lambda) {
                    failures.push(format!("reduced solver λ={lambda} N2={n2}"));
                }
            }
        }
        let config = RandomNetConfig::default();
        for seed in 0..60 {
            let net = random_net(seed, &config);
            let sys = build_system(&net);
            if sys.selection_count() > 1 << 12 {
                continue;
            }
            let scaled_net = net.scale_marking(lambda).unwrap();
            systems += 1;
            let base = solve_all(&sys);
            let big = solve_all(&build_system(&scaled_net));
            if !scales(&base.solutions, &big.solutions, lambda) || base.degenerate != big.degenerate {
                failures.push(format!("net solver λ={lambda} seed {seed}"));
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("λ ∈ {{1/2, 2, 3}}, {systems} solver systems, failures: {failures:?}"),
    )
}

fn scales(base: &[tpn::solver::StationarySolution], big: &[tpn::solver::StationarySolution], lambda: &Rational) -> bool {
    base.len() == big.len()
        && base.iter().zip(big).all(|(a, b)| {
            a.selection_index == b.selection_index
                && a.values.iter().zip(&b.values).all(|(x, y)| x.scale(lambda).ok().as_ref() == Some(y))
        })
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Option<u64>, Check); 9] = [
        (1, "germ semifield laws", Some(1), germ_laws),
        (2, "token oracle equivalence", Some(30), token_oracle),
        (3, "phase table exactness", Some(10), table_exactness),
        (4, "reduction consistency", Some(5), reduction_consistency),
        (5, "fluid convergence", None, fluid_convergence),
        (6, "non-convergence witness", None, non_convergence),
        (7, "stochastic phase diagram", None, stochastic_phases),
        (8, "stationary round trip", Some(5), round_trip),
        (9, "homogeneity", Some(5), homogeneity),
    ];
    let mut unexpected = Vec::new();
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = limit.map_or(true, |s| elapsed < Duration::from_secs(s));
        let pass = outcome.pass && in_time;
        let limit_note = limit.map_or(String::new(), |s| format!(" (limit {s}s)"));
        println!(
            "criterion {n} {name}: {} | {} | {:.2}s{limit_note}",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
        if pass == KNOWN_FAILURES.contains(&n) {
            unexpected.push(n);
        }
    }
    println!("known failures: {KNOWN_FAILURES:?}");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
