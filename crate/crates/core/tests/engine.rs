use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use relcrypt::engine::exact::{enumerate, probability_of_one, DEFAULT_LIMIT};
use relcrypt::engine::{
    attach, parallel, run, Block, Cx, Experiment, Kind, Logic, Payload, RunOptions, Script, Side, Site, System,
};
use relcrypt::primitives::{make_bc, make_mpc, make_ot, make_rabin, make_rot, TwoPartyFn};
use relcrypt::{clone_logic, Error, Result};

fn bit(b: u64) -> Payload {
    Payload::bit(b)
}

fn ot() -> System {
    make_ot(1).unwrap().honest.into()
}

fn ot_script(a0: u64, a1: u64, b: u64) -> Script {
    Script::against(&ot())
        .feed(Side::Alice, "a0", bit(a0), 0.0)
        .unwrap()
        .feed(Side::Alice, "a1", bit(a1), 0.0)
        .unwrap()
        .feed(Side::Bob, "b", bit(b), 0.0)
        .unwrap()
}

#[test]
fn constant_one_distinguisher() {
    let d = ot_script(0, 0, 0).decide(|_| true).build().unwrap();
    let exp = Experiment::new(ot(), d).unwrap();
    assert!(run(&exp, 3).unwrap().0);
}

#[test]
fn ot_selects_the_chosen_input() {
    for (a0, a1, b) in [(0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 1, 1)] {
        let want = if b == 0 { a0 } else { a1 };
        let d = ot_script(a0, a1, b)
            .decide(move |s| s.value(Side::Bob, "out") == Some(want))
            .build()
            .unwrap();
        let exp = Experiment::new(ot(), d).unwrap();
        assert_eq!(probability_of_one(&exp, DEFAULT_LIMIT).unwrap(), BigRational::one());
    }
}

#[test]
fn outputs_arrive_one_unit_after_latest_input_at_bob() {
    let d = Script::against(&ot())
        .feed(Side::Alice, "a0", bit(1), 0.0)
        .unwrap()
        .feed(Side::Alice, "a1", bit(0), 2.5)
        .unwrap()
        .feed(Side::Bob, "b", bit(0), 1.0)
        .unwrap()
        .decide(|s| s.time(Side::Bob, "out") == Some(3.5))
        .build()
        .unwrap();
    let exp = Experiment::new(ot(), d).unwrap();
    let (decision, tr) = run(&exp, 0).unwrap();
    assert!(decision);
    let out = tr.first("OT.out").unwrap();
    assert_eq!(out.x, [1.0, 0.0, 0.0]);
}

#[derive(Clone)]
struct TooFast;

impl Logic for TooFast {
    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        // answer at Alice's site at the same instant Bob's input arrived
        cx.send(1, msg);
        Ok(())
    }

    clone_logic!();
}

#[test]
fn emission_outside_light_cone_is_fatal() {
    let b = Block::build("fast", Site::Alice)
        .input("q", Side::Bob, Kind::BIT)
        .output("r", Side::Alice, Kind::BIT)
        .after(&["q"], "r")
        .finish(TooFast)
        .unwrap();
    let sys = System::of(b);
    let d = Script::against(&sys).feed(Side::Bob, "q", bit(1), 0.0).unwrap().build().unwrap();
    let exp = Experiment::new(sys, d).unwrap();
    assert!(matches!(run(&exp, 0), Err(Error::Causality(_))));
}

#[derive(Clone)]
struct Echo;

impl Logic for Echo {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        cx.wake_at(0.0);
        Ok(())
    }

    fn receive(&mut self, _port: usize, _msg: Payload, _cx: &mut Cx<'_>) -> Result<()> {
        Ok(())
    }

    fn wake(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        cx.wake_at(cx.t());
        Ok(())
    }

    clone_logic!();
}

#[test]
fn non_quiescent_run_hits_the_budget() {
    let b = Block::build("spin", Site::Alice).output("o", Side::Alice, Kind::BIT).finish(Echo).unwrap();
    let sys = System::of(b);
    let d = Script::against(&sys).build().unwrap();
    let exp = Experiment::new(sys, d).unwrap();
    let opts = RunOptions { budget: 1000, ..RunOptions::default() };
    assert!(matches!(relcrypt::engine::run_trial(&exp, 0, &opts), Err(Error::Runaway(1000))));
}

#[test]
fn wrong_payload_kind_is_a_wiring_error() {
    let d = Script::against(&ot()).feed(Side::Bob, "b", Payload::Open, 0.0).unwrap().build().unwrap();
    let exp = Experiment::new(ot(), d).unwrap();
    assert!(matches!(run(&exp, 0), Err(Error::Wiring { .. })));
}

#[test]
fn distinguisher_must_cover_every_port() {
    let partial = Script::against(&make_rabin(Ratio::new(1, 2), 1).unwrap().honest.into()).build().unwrap();
    assert!(matches!(Experiment::new(ot(), partial), Err(Error::Wiring { .. })));
}

#[test]
fn same_seed_gives_identical_transcript() {
    let rot: System = make_rot(2).unwrap().honest.into();
    let d = Script::against(&rot).feed(Side::Bob, "b", bit(1), 0.5).unwrap().build().unwrap();
    let exp = Experiment::new(rot, d).unwrap();
    let a = run(&exp, 42).unwrap().1.to_jsonl();
    let b = run(&exp, 42).unwrap().1.to_jsonl();
    assert_eq!(a, b);
    assert!(a.lines().all(|l| l.contains("\"trial\"") && l.contains("\"seq\"") && l.contains("\"x\"")));
    let differs = (0..20).any(|s| run(&exp, s).unwrap().1.to_jsonl() != a);
    assert!(differs);
}

#[test]
fn transcript_is_sorted() {
    let mpc: System = make_mpc(TwoPartyFn::and()).unwrap().honest.into();
    let d = Script::against(&mpc)
        .feed(Side::Alice, "x", bit(1), 2.0)
        .unwrap()
        .feed(Side::Bob, "y", bit(1), 0.0)
        .unwrap()
        .build()
        .unwrap();
    let exp = Experiment::new(mpc, d).unwrap();
    let tr = run(&exp, 0).unwrap().1;
    let ts: Vec<f64> = tr.events().iter().map(|e| e.t).collect();
    assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    assert!(tr.audit(&exp).ok());
}

#[test]
fn mpc_examples() {
    for (f, x, y, want) in [
        (TwoPartyFn::and(), 1, 1, 1),
        (TwoPartyFn::and(), 0, 1, 0),
        (TwoPartyFn::or(), 0, 0, 0),
    ] {
        let mpc: System = make_mpc(f).unwrap().honest.into();
        let d = Script::against(&mpc)
            .feed(Side::Alice, "x", bit(x), 0.0)
            .unwrap()
            .feed(Side::Bob, "y", bit(y), 0.0)
            .unwrap()
            .decide(move |s| s.value(Side::Alice, "fa") == Some(want) && s.value(Side::Bob, "fb") == Some(want))
            .build()
            .unwrap();
        assert!(run(&Experiment::new(mpc, d).unwrap(), 0).unwrap().0);
    }
}

#[test]
fn mpc_duplicate_input_is_an_order_error() {
    let mpc: System = make_mpc(TwoPartyFn::and()).unwrap().honest.into();
    let d = Script::against(&mpc)
        .feed(Side::Alice, "x", bit(1), 0.0)
        .unwrap()
        .feed(Side::Alice, "x", bit(0), 0.5)
        .unwrap()
        .build()
        .unwrap();
    assert!(matches!(run(&Experiment::new(mpc, d).unwrap(), 0), Err(Error::ProtocolOrder { .. })));
}

fn bc_script(x: Option<u64>, open_at: Option<f64>) -> Script {
    let bc: System = make_bc().unwrap().honest.into();
    let mut s = Script::against(&bc);
    if let Some(x) = x {
        s = s.feed(Side::Alice, "x", bit(x), 0.0).unwrap();
    }
    if let Some(t) = open_at {
        s = s.feed(Side::Alice, "open", Payload::Open, t).unwrap();
    }
    s
}

#[test]
fn commitment_examples() {
    let bc = || -> System { make_bc().unwrap().honest.into() };
    let d = bc_script(Some(1), Some(2.0))
        .decide(|s| s.get(Side::Bob, "recv") == Some(Payload::Recv) && s.value(Side::Bob, "val") == Some(1))
        .build()
        .unwrap();
    assert!(run(&Experiment::new(bc(), d).unwrap(), 0).unwrap().0);

    let d = bc_script(Some(0), None)
        .decide(|s| s.get(Side::Bob, "recv") == Some(Payload::Recv) && s.get(Side::Bob, "val").is_none())
        .build()
        .unwrap();
    assert!(run(&Experiment::new(bc(), d).unwrap(), 0).unwrap().0);

    let d = bc_script(None, Some(1.0)).build().unwrap();
    assert!(matches!(run(&Experiment::new(bc(), d).unwrap(), 0), Err(Error::ProtocolOrder { .. })));
}

#[test]
fn commitment_hides_before_open() {
    let bc = || -> System { make_bc().unwrap().honest.into() };
    let bob_view = |x: u64| {
        let d = bc_script(Some(x), None).build().unwrap();
        let exp = Experiment::new(bc(), d).unwrap();
        let tr = run(&exp, 9).unwrap().1;
        tr.events()
            .iter()
            .filter(|e| e.x == [1.0, 0.0, 0.0])
            .map(|e| serde_json::to_string(e).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(bob_view(0), bob_view(1));
}

#[test]
fn rabin_extremes() {
    for (p, want_value) in [(Ratio::new(1, 1), true), (Ratio::new(0, 1), false)] {
        let r: System = make_rabin(p, 1).unwrap().honest.into();
        for x in 0..2 {
            let d = Script::against(&r)
                .feed(Side::Alice, "x", bit(x), 0.0)
                .unwrap()
                .decide(move |s| {
                    let got = s.get(Side::Bob, "out").unwrap();
                    if want_value {
                        got == Payload::bit(x)
                    } else {
                        got.is_bot()
                    }
                })
                .build()
                .unwrap();
            let exp = Experiment::new(r.clone(), d).unwrap();
            assert_eq!(probability_of_one(&exp, DEFAULT_LIMIT).unwrap(), BigRational::one());
        }
    }
}

#[test]
fn rabin_delivery_is_independent_of_input() {
    let r: System = make_rabin(Ratio::new(1, 2), 1).unwrap().honest.into();
    let delivered = |x: u64| {
        let d = Script::against(&r)
            .feed(Side::Alice, "x", bit(x), 0.0)
            .unwrap()
            .decide(|s| !s.get(Side::Bob, "out").unwrap().is_bot())
            .build()
            .unwrap();
        probability_of_one(&Experiment::new(r.clone(), d).unwrap(), DEFAULT_LIMIT).unwrap()
    };
    assert_eq!(delivered(0), BigRational::new(1.into(), 2.into()));
    assert_eq!(delivered(0), delivered(1));
}

#[test]
fn rabin_half_empirical_rate() {
    const N: u64 = 100_000;
    let r: System = make_rabin(Ratio::new(1, 2), 1).unwrap().honest.into();
    let d = Script::against(&r)
        .feed(Side::Alice, "x", bit(1), 0.0)
        .unwrap()
        .decide(|s| !s.get(Side::Bob, "out").unwrap().is_bot())
        .build()
        .unwrap();
    let exp = Experiment::new(r, d).unwrap();
    let ones = relcrypt::engine::count_ones(&exp, 11, N).unwrap();
    let f = ones as f64 / N as f64;
    assert!((f - 0.5).abs() <= 3.0 * (0.25 / N as f64).sqrt(), "rate {f}");
}

#[test]
fn honest_rot_outputs_chosen_string() {
    const N: u64 = 100_000;
    let rot: System = make_rot(1).unwrap().honest.into();
    let d = Script::against(&rot)
        .feed(Side::Bob, "b", bit(0), 0.0)
        .unwrap()
        .decide(|s| {
            assert_eq!(s.get(Side::Bob, "out"), s.get(Side::Alice, "s0"));
            s.value(Side::Alice, "s0") == Some(1)
        })
        .build()
        .unwrap();
    let exp = Experiment::new(rot, d).unwrap();
    let ones = relcrypt::engine::count_ones(&exp, 5, N).unwrap();
    let f = ones as f64 / N as f64;
    assert!((f - 0.5).abs() <= 3.0 * (0.25 / N as f64).sqrt(), "s0 frequency {f}");
}

#[test]
fn dishonest_alice_rot_forwards_her_choice() {
    let rot: System = make_rot(1).unwrap().dishonest_alice.into();
    for b in 0..2 {
        let d = Script::against(&rot)
            .feed(Side::Alice, "s0", bit(1), 0.0)
            .unwrap()
            .feed(Side::Alice, "s1", bit(1), 0.0)
            .unwrap()
            .feed(Side::Bob, "b", bit(b), 0.0)
            .unwrap()
            .decide(|s| s.value(Side::Bob, "out") == Some(1))
            .build()
            .unwrap();
        assert!(run(&Experiment::new(rot.clone(), d).unwrap(), 0).unwrap().0);
    }
}

#[test]
fn ot_views_hide_the_other_input_and_the_choice() {
    // Bob's view depends only on (b, a_b); Alice sees nothing at all.
    let view_dist = |a0, a1, b| {
        let d = ot_script(a0, a1, b).build().unwrap();
        let exp = Experiment::new(ot(), d).unwrap();
        let dist = enumerate(&exp, DEFAULT_LIMIT, &RunOptions::viewing(), |o| o.view.clone().unwrap()).unwrap();
        let mut v: Vec<_> = dist.outcomes.into_iter().collect();
        v.sort();
        v
    };
    assert_eq!(view_dist(0, 0, 0), view_dist(0, 1, 0));
    assert_eq!(view_dist(1, 0, 1), view_dist(0, 0, 1));
}

#[derive(Clone)]
struct Forward;

impl Logic for Forward {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        // inputs at even indices, outputs right after them
        cx.send(port + 1, msg);
        Ok(())
    }

    clone_logic!();
}

#[test]
fn port_names_are_unique_within_a_box() {
    let r = Block::build("fwd", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .output("a0", Side::Alice, Kind::BIT)
        .finish(Forward);
    assert!(matches!(r, Err(Error::Wiring { .. })));
}

// inner and outer ports share names once exposed, so the box uses suffixes
fn identity_alice_converter() -> Block {
    Block::build("fwd", Site::Alice)
        .input("a0o", Side::Outer, Kind::BIT)
        .output("a0i", Side::Alice, Kind::BIT)
        .input("a1o", Side::Outer, Kind::BIT)
        .output("a1i", Side::Alice, Kind::BIT)
        .after(&["a0o"], "a0i")
        .after(&["a1o"], "a1i")
        .finish(Forward)
        .unwrap()
}

fn identity_alice() -> System {
    System::of(identity_alice_converter())
        .rename((Side::Outer, "a0o"), (Side::Outer, "a0"))
        .unwrap()
        .rename((Side::Outer, "a1o"), (Side::Outer, "a1"))
        .unwrap()
        .rename((Side::Alice, "a0i"), (Side::Alice, "a0"))
        .unwrap()
        .rename((Side::Alice, "a1i"), (Side::Alice, "a1"))
        .unwrap()
}

#[test]
fn identity_converter_is_transparent() {
    let wrapped = attach(identity_alice(), ot(), Side::Alice).unwrap();
    assert_eq!(wrapped.ports(), ot().ports());
    for (a0, a1, b) in [(0, 1, 1), (1, 0, 1), (1, 1, 0)] {
        let views = |sys: System| {
            let d = ot_script(a0, a1, b).build().unwrap();
            let exp = Experiment::new(sys, d).unwrap();
            enumerate(&exp, DEFAULT_LIMIT, &RunOptions::viewing(), |o| {
                o.view.clone().unwrap().0.into_iter().map(|(_, p)| p).collect::<Vec<_>>()
            })
            .unwrap()
            .outcomes
        };
        assert_eq!(views(wrapped.clone()), views(ot()));
    }
}

#[test]
fn attach_rejects_mismatched_ports() {
    let r: System = make_rabin(Ratio::new(1, 2), 1).unwrap().honest.into();
    assert!(matches!(attach(identity_alice(), r, Side::Alice), Err(Error::Wiring { .. })));
}

#[test]
fn parallel_composition() {
    let r: System = make_rabin(Ratio::new(1, 2), 1).unwrap().honest.into();
    let single = parallel(vec![r.clone()]).unwrap();
    assert_eq!(single.ports(), r.ports());

    let many = parallel(vec![r.clone(); 12]).unwrap();
    let ports = many.ports();
    assert_eq!(ports.iter().filter(|p| p.side == Side::Alice).count(), 12);
    assert_eq!(ports.iter().filter(|p| p.side == Side::Bob).count(), 12);

    let both = parallel(vec![ot(), r]).unwrap();
    let d = Script::against(&both)
        .feed(Side::Alice, "0/a0", bit(1), 0.0)
        .unwrap()
        .feed(Side::Alice, "0/a1", bit(0), 0.0)
        .unwrap()
        .feed(Side::Bob, "0/b", bit(0), 0.0)
        .unwrap()
        .decide(|s| s.get(Side::Bob, "1/out").is_none() && s.value(Side::Bob, "0/out") == Some(1))
        .build()
        .unwrap();
    let exp = Experiment::new(both, d).unwrap();
    let (decision, tr) = run(&exp, 0).unwrap();
    assert!(decision);
    assert!(tr.events().iter().all(|e| !e.wire.starts_with("1/")));
}

#[test]
fn composed_distinguisher_sees_the_same_statistics() {
    // D over (fwd attached to OT) versus (D joined with fwd) over OT
    for (a0, a1, b) in [(0, 1, 1), (1, 0, 0)] {
        let sys = attach(identity_alice(), ot(), Side::Alice).unwrap();
        let d = ot_script(a0, a1, b).decide(|s| s.value(Side::Bob, "out") == Some(1)).build().unwrap();
        let left = probability_of_one(&Experiment::new(sys, d.clone()).unwrap(), DEFAULT_LIMIT).unwrap();
        let conv = identity_alice();
        let dalpha = d
            .join(conv, &[((Side::Alice, "a0"), (Side::Outer, "a0")), ((Side::Alice, "a1"), (Side::Outer, "a1"))])
            .unwrap();
        let right = probability_of_one(&Experiment::new(ot(), dalpha).unwrap(), DEFAULT_LIMIT).unwrap();
        assert_eq!(left, right);
        assert!(left == BigRational::one() || left == BigRational::zero());
    }
}
