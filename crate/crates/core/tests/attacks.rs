use num_rational::{BigRational, Ratio};
use num_traits::Zero;
use relcrypt::attacks::{
    and_forward_y, build_chain, d_and, d_rabin, d_rot, impossibility_bound, rot_deterministic_sweep, run_attack,
    run_strategies, trigger_probability, Attack, AttackSettings, Theorem,
};
use relcrypt::engine::exact::DEFAULT_LIMIT;
use relcrypt::engine::{run, Experiment, System};
use relcrypt::primitives::{make_mpc, make_rabin, make_rot, TwoPartyFn};
use relcrypt::stats::Mode;
use relcrypt::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn strategy(attack: &Attack, name: &str) -> relcrypt::attacks::Strategy {
    attack.library().unwrap().into_iter().find(|s| s.name == name).expect("library strategy")
}

/// Forwarding `s_0` to both slots: mismatch only when `b' = 1` and the two
/// uniform strings differ. Counted over `b'` and both strings.
fn forward_oracle(s: u32) -> BigRational {
    let n = 1u64 << s;
    let mut hits = 0;
    for b in 0..2 {
        for s0 in 0..n {
            for s1 in 0..n {
                let got = s0;
                let want = if b == 0 { s0 } else { s1 };
                hits += u64::from(got != want);
            }
        }
    }
    q(hits as i64, (2 * n * n) as i64)
}

/// Forward-or-uniform over Rabin OT: enumerate `x`, both delivery bits and
/// the fill-in string.
fn rabin_oracle(p: Ratio<u64>, s: u32) -> BigRational {
    let n = 1u64 << s;
    let pr = q(*p.numer() as i64, *p.denom() as i64);
    let one = q(1, 1);
    let mut total = BigRational::zero();
    for x in 0..n {
        for left in [true, false] {
            for right in [true, false] {
                for fill in 0..n {
                    let w = |d: bool| if d { pr.clone() } else { one.clone() - pr.clone() };
                    let weight = w(left) * w(right) * q(1, (n * n) as i64);
                    let sent = if left { x } else { fill };
                    if right && sent != x {
                        total += weight;
                    }
                }
            }
        }
    }
    total
}

#[test]
fn ideal_resources_never_trigger() {
    let rot: System = make_rot(1).unwrap().honest.into();
    assert!(trigger_probability(&rot, &d_rot(1).unwrap(), DEFAULT_LIMIT).unwrap().is_zero());
    let rot2: System = make_rot(2).unwrap().honest.into();
    assert!(trigger_probability(&rot2, &d_rot(2).unwrap(), DEFAULT_LIMIT).unwrap().is_zero());
    for p in [Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(3, 4)] {
        let r: System = make_rabin(p, 1).unwrap().honest.into();
        assert!(trigger_probability(&r, &d_rabin(1).unwrap(), DEFAULT_LIMIT).unwrap().is_zero());
    }
    let and: System = make_mpc(TwoPartyFn::and()).unwrap().honest.into();
    assert!(trigger_probability(&and, &d_and().unwrap(), DEFAULT_LIMIT).unwrap().is_zero());
}

#[test]
fn chains_expose_the_honest_interface() {
    for label in ["attack.rot", "attack.rot:s=2", "attack.rabin:p=1/4,s=1", "attack.and"] {
        let a = Attack::parse(label).unwrap();
        let t = a.triple().unwrap();
        for st in a.library().unwrap() {
            let chain = build_chain(&t, &st).unwrap();
            assert_eq!(chain.ports(), System::from(t.honest.clone()).ports(), "{label} {}", st.name);
        }
    }
}

#[test]
fn mismatched_strategy_is_a_wiring_error() {
    let rot = Attack::parse("attack.rot").unwrap();
    let and = Attack::parse("attack.and").unwrap();
    let st = rot.library().unwrap().remove(0);
    assert!(matches!(build_chain(&and.triple().unwrap(), &st), Err(Error::Wiring { .. })));
    let wide = Attack::parse("attack.rot:s=2").unwrap();
    assert!(matches!(build_chain(&wide.triple().unwrap(), &st), Err(Error::Wiring { .. })));
}

#[test]
fn rot_forwarding_matches_oracle() {
    for s in [1u8, 2] {
        let a = Attack::parse(&format!("attack.rot:s={s}")).unwrap();
        let chain = build_chain(&a.triple().unwrap(), &strategy(&a, "forward-b0")).unwrap();
        let got = trigger_probability(&chain, &a.distinguisher().unwrap(), DEFAULT_LIMIT).unwrap();
        assert_eq!(got, forward_oracle(u32::from(s)));
        assert_eq!(got, a.bound());
    }
    assert_eq!(forward_oracle(1), q(1, 4));
    assert_eq!(forward_oracle(2), q(3, 8));
}

#[test]
fn rot_library_meets_the_bound() {
    let a = Attack::parse("attack.rot").unwrap();
    let res = run_attack(&a, &AttackSettings::default()).unwrap();
    assert!(res.len() >= 4);
    for r in &res {
        assert!(r.verdict, "{}", r.strategy);
        assert_eq!(r.ideal_trigger, "0");
    }
    let fresh = res.iter().find(|r| r.strategy == "fresh-uniform").unwrap();
    assert_eq!(fresh.report.exact.as_deref(), Some("1/2"));
}

#[test]
fn deterministic_sweep_minimum_is_a_quarter() {
    let a = Attack::parse("attack.rot").unwrap();
    let res = run_strategies(&a, &rot_deterministic_sweep().unwrap(), &AttackSettings::default()).unwrap();
    assert_eq!(res.len(), 40);
    let min = res.iter().map(|r| r.report.exact.as_ref().unwrap().parse::<BigRational>().unwrap()).min().unwrap();
    assert_eq!(min, q(1, 4));
    assert!(res.iter().all(|r| r.verdict));
    // strategies that commit to strings before seeing anything do no better than a coin
    let early_min = res
        .iter()
        .filter(|r| r.strategy.contains("first"))
        .map(|r| r.report.value)
        .fold(1.0, f64::min);
    assert_eq!(early_min, 0.5);
}

#[test]
fn rabin_forwarding_matches_oracle() {
    for (p, s) in [(Ratio::new(1, 4), 1u8), (Ratio::new(1, 2), 1), (Ratio::new(3, 4), 1), (Ratio::new(1, 2), 2)] {
        let a = Attack::new(Theorem::Rabin, p, s).unwrap();
        let chain = build_chain(&a.triple().unwrap(), &strategy(&a, "forward-or-uniform")).unwrap();
        let got = trigger_probability(&chain, &a.distinguisher().unwrap(), DEFAULT_LIMIT).unwrap();
        assert_eq!(got, rabin_oracle(p, u32::from(s)), "p={p} s={s}");
        assert_eq!(got, impossibility_bound(Theorem::Rabin, p, s).unwrap());
    }
    assert_eq!(rabin_oracle(Ratio::new(1, 4), 1), q(3, 32));
    assert_eq!(rabin_oracle(Ratio::new(1, 2), 2), q(3, 16));
}

#[test]
fn rabin_library_meets_the_bound() {
    for p in [Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(3, 4)] {
        let a = Attack::new(Theorem::Rabin, p, 1).unwrap();
        for r in run_attack(&a, &AttackSettings::default()).unwrap() {
            assert!(r.verdict, "p={p} {}", r.strategy);
        }
    }
}

#[test]
fn rabin_sampling_agrees_with_enumeration() {
    let a = Attack::new(Theorem::Rabin, Ratio::new(1, 2), 1).unwrap();
    let s = AttackSettings { mode: Mode::MonteCarlo, trials: 20_000, seed: 11, ..Default::default() };
    let res = run_attack(&a, &s).unwrap();
    let fwd = res.iter().find(|r| r.strategy == "forward-or-uniform").unwrap();
    assert!(fwd.report.contains(0.125), "{:?}", fwd.report);
}

#[test]
fn and_library_meets_the_bound() {
    let a = Attack::parse("attack.and").unwrap();
    let res = run_attack(&a, &AttackSettings::default()).unwrap();
    assert_eq!(res.len(), 3);
    for r in &res {
        assert!(r.verdict, "{}", r.strategy);
        assert_eq!(r.report.exact.as_deref(), Some("1/4"), "{}", r.strategy);
    }
}

#[test]
fn forwarding_y_breaks_causality() {
    let a = Attack::parse("attack.and").unwrap();
    let chain = build_chain(&a.triple().unwrap(), &and_forward_y().unwrap()).unwrap();
    let exp = Experiment::new(chain, d_and().unwrap()).unwrap();
    assert!(matches!(run(&exp, 0), Err(Error::Causality(_))));
}

#[test]
fn bounds_for_every_theorem() {
    let h = Ratio::new(1, 2);
    assert_eq!(impossibility_bound(Theorem::Ot, h, 1).unwrap(), q(1, 4));
    assert!(impossibility_bound(Theorem::Rabin, Ratio::new(0, 1), 1).unwrap().is_zero());
    assert!(impossibility_bound(Theorem::Rabin, Ratio::new(1, 1), 3).unwrap().is_zero());
    for s in 1..=8u8 {
        let b = impossibility_bound(Theorem::Rot, h, s).unwrap();
        assert!(b < q(1, 2) && b >= q(1, 4));
    }
}
