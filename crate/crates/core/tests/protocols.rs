use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use relcrypt::engine::exact::DEFAULT_LIMIT;
use relcrypt::engine::{Experiment, Payload, Script, Side, System};
use relcrypt::protocols::{
    assess_case, case, cases, labels, pi3_cases_with_reveal_delay, pi4_abort, pi4_both_known, pi4_cases,
    pi4_cases_with, pi5_cases, pi5_cheat_success, pi5_cheater, pi5_check_params, pi5_honest_abort,
    pi5_honest_abort_oracle, pi5_skip_pass_rate, pi6_binding_attack, pi6_cases, pi6_cases_with, Condition,
    ConstructionCase, EvalSettings, Params, Pi5Goal, Pi6Simulator, SubsetPolicy,
};
use relcrypt::stats::{
    binomial_tail, count_ones, exact_probability, exact_probability_pinned, half, hypergeometric_pmf,
    total_variation, view_distribution, Tail,
};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn pick(all: Vec<ConstructionCase>, c: Condition) -> ConstructionCase {
    all.into_iter().find(|x| x.condition == c).expect("condition present")
}

fn exact(case: &ConstructionCase, d: &System) -> BigRational {
    let r = Experiment::new(case.real.clone(), d.clone()).unwrap();
    let i = Experiment::new(case.ideal.clone(), d.clone()).unwrap();
    let (pr, _) = exact_probability(&r, DEFAULT_LIMIT).unwrap();
    let (pi, _) = exact_probability(&i, DEFAULT_LIMIT).unwrap();
    num_traits::Signed::abs(&(pr - pi))
}

/// Brute-force `P[Binom(n, 1/2) in range]` by counting bit patterns.
fn count_patterns(n: u32, keep: impl Fn(u32) -> bool) -> BigRational {
    let hits = (0u64..1 << n).filter(|m| keep(m.count_ones())).count() as i64;
    q(hits, 1 << n)
}

#[test]
fn labels_cover_every_construction_and_condition() {
    let l = labels();
    assert_eq!(l.len(), 18);
    assert!(l.contains(&"pi5.dB".to_string()));
    assert!(case("pi9.dA", Params::default()).is_err());
    assert!(case("pi4.xx", Params::default()).is_err());
}

#[test]
fn perfect_constructions_have_zero_exhaustive_advantage() {
    for c in ["pi1", "pi2", "pi3"] {
        for k in cases(c, Params::default()).unwrap() {
            let e = k.exhaustive(DEFAULT_LIMIT).unwrap();
            assert!(e.value.is_zero(), "{} {}: {} at {}", k.label, k.condition, e.value, e.witness);
        }
    }
    for k in pi6_cases(2).unwrap().into_iter().filter(|c| c.condition != Condition::DishonestAlice) {
        let e = k.exhaustive(DEFAULT_LIMIT).unwrap();
        assert!(e.value.is_zero(), "{} {}", k.label, k.condition);
    }
}

#[test]
fn perfect_cases_pass_every_reference_and_audit() {
    for c in ["pi1", "pi2", "pi3"] {
        for k in cases(c, Params::default()).unwrap() {
            for a in assess_case(&k, &EvalSettings::default()).unwrap() {
                assert!(a.verdict, "{} {} {}", a.label, a.condition, a.distinguisher);
                assert_eq!(a.report.value, 0.0);
            }
            for seed in 0..3 {
                let r = k.audit(seed).unwrap();
                assert!(r.ok(), "{} {}: {:?}", k.label, k.condition, r.entries.iter().find(|e| !e.ok));
            }
        }
    }
}

#[test]
fn early_reveal_breaks_the_ordering_clause() {
    let honest = pick(pi3_cases_with_reveal_delay(0.5).unwrap(), Condition::Honest);
    let bad = (0..4).any(|s| !honest.audit(s).unwrap().ok());
    assert!(bad);
}

#[test]
fn pi4_tail_oracles() {
    for k in 1..=5u32 {
        assert_eq!(pi4_abort(k).unwrap(), count_patterns(3 * k, |x| x < k));
        assert_eq!(pi4_both_known(k).unwrap(), count_patterns(3 * k, |x| x >= 2 * k));
        assert_eq!(pi4_abort(k).unwrap(), binomial_tail(3 * k as u64, &half(), Tail::Lt(k as u64)).unwrap());
    }
    assert_eq!(pi4_abort(1).unwrap(), q(1, 8));
    assert_eq!(pi4_abort(2).unwrap(), q(7, 64));
    assert_eq!(pi4_abort(4).unwrap(), q(299, 4096));
}

#[test]
fn pi4_exact_advantages_match_oracles() {
    for k in [1u32, 2] {
        let all = pi4_cases(k).unwrap();
        for c in &all {
            let got: Vec<_> = assess_case(c, &EvalSettings::default()).unwrap();
            let worst = got.iter().map(|a| a.report.value).fold(0.0, f64::max);
            let want = match c.condition {
                Condition::Honest => pi4_abort(k).unwrap(),
                Condition::DishonestAlice => BigRational::zero(),
                Condition::DishonestBob => pi4_both_known(k).unwrap(),
            };
            assert!(got.iter().all(|a| a.verdict), "{} {}", c.label, c.condition);
            assert!((worst - want.to_f64().unwrap()).abs() < 1e-12, "{} {}: {worst}", c.label, c.condition);
        }
    }
}

#[test]
fn pi4_honest_k4_reference_is_the_abort_probability() {
    let c = pick(pi4_cases(4).unwrap(), Condition::Honest);
    let r = &c.references[0];
    let er = Experiment::new(c.real.clone(), r.system.clone()).unwrap();
    let ei = Experiment::new(c.ideal.clone(), r.system.clone()).unwrap();
    let (pr, _) = exact_probability_pinned(&er, DEFAULT_LIMIT, &r.pinned).unwrap();
    let (pi, _) = exact_probability(&ei, DEFAULT_LIMIT).unwrap();
    assert_eq!(num_traits::Signed::abs(&(pr - pi)), q(299, 4096));
}

#[test]
fn pinning_matches_full_enumeration() {
    for k in [1u32, 2] {
        for c in pi4_cases(k).unwrap() {
            for r in c.references.iter().filter(|r| !r.pinned.is_empty()) {
                let e = Experiment::new(c.real.clone(), r.system.clone()).unwrap();
                let full = exact_probability(&e, DEFAULT_LIMIT).unwrap().0;
                let pinned = exact_probability_pinned(&e, DEFAULT_LIMIT, &r.pinned).unwrap().0;
                assert_eq!(full, pinned, "k={k} {} {}", c.condition, r.name);
            }
        }
    }
}

#[test]
fn lexicographic_subsets_leak_the_choice() {
    let c = pick(pi4_cases_with(1, SubsetPolicy::Lex).unwrap(), Condition::DishonestAlice);
    let worst = assess_case(&c, &EvalSettings::default())
        .unwrap()
        .iter()
        .map(|a| a.report.value)
        .fold(0.0, f64::max);
    assert!(worst > 0.0);
}

#[test]
fn pi5_parameter_checks() {
    assert_eq!(pi5_check_params(12).unwrap(), (6, 6, 2));
    for bad in [5, 8, 10, 50] {
        assert!(pi5_check_params(bad).is_err(), "{bad}");
    }
}

#[test]
fn pi5_honest_abort_matches_closed_form() {
    for n in [6u32, 12] {
        assert_eq!(pi5_honest_abort(n).unwrap(), pi5_honest_abort_oracle(n).unwrap());
    }
    assert_eq!(pi5_honest_abort(12).unwrap(), q(7, 64));
}

#[test]
fn pi5_skip_rates() {
    assert_eq!(pi5_skip_pass_rate(12, 0).unwrap(), q(1, 1));
    assert_eq!(pi5_skip_pass_rate(12, 12).unwrap(), q(729, 4096));
    // (3/4)^z weighted by the number z of skipped positions in the test set
    let mut want = BigRational::zero();
    for z in 0..=4u64 {
        want += hypergeometric_pmf(12, 4, 6, z) * q(3i64.pow(z as u32), 4i64.pow(z as u32));
    }
    assert_eq!(pi5_skip_pass_rate(12, 4).unwrap(), want);
    assert_eq!(pi5_cheat_success(12, 0).unwrap(), q(11, 32));
    let worst = (0..=12).map(|s| pi5_cheat_success(12, s).unwrap()).max().unwrap();
    assert!((worst.to_f64().unwrap() - 0.4196).abs() < 1e-3);
}

#[test]
fn pi5_skip_all_pass_rate_by_sampling() {
    let c = pick(pi5_cases(12).unwrap(), Condition::DishonestBob);
    let d = pi5_cheater(12, 12, Pi5Goal::PassTest).unwrap();
    let e = Experiment::new(c.real.clone(), d).unwrap();
    let trials = 4000;
    let hits = count_ones(&e, 7, trials).unwrap();
    let p = hits as f64 / trials as f64;
    // Hoeffding at 1e-6 failure probability
    let eps = ((2.0 / 1e-6f64).ln() / (2.0 * trials as f64)).sqrt();
    assert!((p - 729.0 / 4096.0).abs() < eps, "{p}");
}

#[test]
fn pi5_cases_hold_by_sampling() {
    let s = EvalSettings { mode: relcrypt::stats::Mode::MonteCarlo, trials: 2000, seed: 3, ..Default::default() };
    for c in pi5_cases(12).unwrap() {
        for a in assess_case(&c, &s).unwrap() {
            assert!(a.verdict, "{} {} {}", a.label, a.condition, a.distinguisher);
        }
        let r = c.audit(1).unwrap();
        assert!(r.ok(), "{}: {:?}", c.condition, r.entries.iter().find(|e| !e.ok));
    }
}

#[test]
fn pi6_dishonest_alice_advantage_is_at_most_two_to_minus_k() {
    for k in 1..=3u32 {
        let c = pick(pi6_cases(k).unwrap(), Condition::DishonestAlice);
        let e = c.exhaustive(DEFAULT_LIMIT).unwrap();
        assert!(e.value <= q(1, 1 << k), "k={k}: {} at {}", e.value, e.witness);
    }
    let c = pick(pi6_cases(2).unwrap(), Condition::DishonestAlice);
    assert_eq!(c.exhaustive(DEFAULT_LIMIT).unwrap().value, q(1, 4));
}

#[test]
fn first_pair_simulator_is_beaten() {
    let c = pick(pi6_cases_with(2, Pi6Simulator::FirstPair).unwrap(), Condition::DishonestAlice);
    assert_eq!(c.exhaustive(DEFAULT_LIMIT).unwrap().value, q(1, 2));
}

#[test]
fn binding_attack_succeeds_with_two_to_minus_k() {
    for k in [1u32, 2, 4] {
        let c = pick(pi6_cases(k).unwrap(), Condition::DishonestAlice);
        let d = pi6_binding_attack(k).unwrap();
        let e = Experiment::new(c.real.clone(), d.clone()).unwrap();
        assert_eq!(exact_probability(&e, DEFAULT_LIMIT).unwrap().0, q(1, 1 << k), "k={k}");
        assert_eq!(exact(&c, &d), q(1, 1 << k));
    }
}

/// Bob's view before any opening, for committed value `x`.
fn pre_open_views(sys: &System, x: u64) -> std::collections::HashMap<relcrypt::engine::View, BigRational> {
    let mut s = Script::against(sys);
    for p in sys.ports().into_iter().filter(|p| p.dir == relcrypt::engine::Dir::In && p.name != "open") {
        let v = if p.name == "x" { x } else { 0 };
        s = s.feed(p.side, &p.name, Payload::bit(v), 0.0).unwrap();
    }
    let d = s.decide(|_| false).build().unwrap();
    view_distribution(&Experiment::new(sys.clone(), d).unwrap(), DEFAULT_LIMIT).unwrap().outcomes
}

#[test]
fn commitment_hides_before_the_opening() {
    for cond in [Condition::Honest, Condition::DishonestBob] {
        let c = pick(pi6_cases(3).unwrap(), cond);
        let tv = total_variation(&pre_open_views(&c.real, 0), &pre_open_views(&c.real, 1));
        assert!(tv.is_zero(), "{cond}: {tv}");
    }
}

#[test]
fn constructions_pass_audits() {
    for c in pi4_cases(2).unwrap().into_iter().chain(pi6_cases(2).unwrap()) {
        for seed in 0..2 {
            let r = c.audit(seed).unwrap();
            assert!(r.ok(), "{} {}: {:?}", c.label, c.condition, r.entries.iter().find(|e| !e.ok));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pi4_abort_and_knowledge_are_complementary_tails(k in 1u32..=16) {
        let n = 3 * k as u64;
        let ge = binomial_tail(n, &half(), Tail::Ge(k as u64)).unwrap();
        prop_assert_eq!(pi4_abort(k).unwrap() + ge, q(1, 1));
        // symmetry of the fair binomial: P[X < k] = P[X > 2k]
        let gt = binomial_tail(n, &half(), Tail::Ge(2 * k as u64 + 1)).unwrap();
        prop_assert_eq!(pi4_abort(k).unwrap(), gt);
        prop_assert!(pi4_both_known(k).unwrap() > pi4_abort(k).unwrap());
    }

    #[test]
    fn pi5_pass_rate_falls_with_skips(skip in 0u32..12) {
        prop_assert!(pi5_skip_pass_rate(12, skip + 1).unwrap() <= pi5_skip_pass_rate(12, skip).unwrap());
    }

    #[test]
    fn pi6_honest_runs_deliver_the_committed_bit(k in 1u32..=4, x in 0u64..2, seed in 0u64..1000) {
        let c = pick(pi6_cases(k).unwrap(), Condition::Honest);
        let mut s = Script::against(&c.real);
        for p in c.real.ports().into_iter().filter(|p| p.dir == relcrypt::engine::Dir::In) {
            let (v, t) = match p.name.as_str() { "x" => (Payload::bit(x), 0.0), _ => (Payload::Open, 3.0) };
            s = s.feed(p.side, &p.name, v, t).unwrap();
        }
        let d = s.decide(move |seen| seen.value(Side::Bob, "val") == Some(x)).build().unwrap();
        prop_assert!(relcrypt::engine::run(&Experiment::new(c.real.clone(), d).unwrap(), seed).unwrap().0);
    }
}
