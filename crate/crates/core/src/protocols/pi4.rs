//! OT from `3k` Rabin OTs.
//!
//! Alice sends `3k` random bits through the Rabin instances. Bob, who received
//! `X` of them, aborts if `X < k`; otherwise he names two disjoint `k`-subsets,
//! `I_b` inside the received positions and `I_{1-b}` from the rest. Alice
//! answers `t_i = a_i ^ (XOR of her bits over I_i)` and Bob unmasks `t_b`.

use num_rational::Ratio;

use super::common::{bit_or_bot, choose_pair, full, indexed, parity, popcount, positions, valid_pair, Inbox, Mirror, SubsetPolicy};
use super::pi1::fixed;
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, channel, Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::{Error, Result};
use crate::primitives::{make_ot, make_rabin};
use crate::stats::{binomial_tail, chernoff_upper, half, Tail, TailSide};

/// Base port of the per-instance Rabin ports in every box below.
const RABIN: usize = 6;

fn instances(k: u32) -> usize {
    3 * k as usize
}

#[derive(Clone)]
struct Sender {
    k: u32,
    s: Vec<u64>,
    inbox: Inbox,
}

// a0 a1 I0 I1 | t0 t1 | j/x...
impl Logic for Sender {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for j in 0..instances(self.k) {
            let v = cx.bit();
            self.s[j] = v;
            cx.send(RABIN + j, Payload::bit(v));
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["a0", "a1", "I0", "I1"][port])?;
        if !self.inbox.all(0..4) {
            return Ok(());
        }
        let universe = full(3 * self.k);
        let pair = valid_pair(self.inbox.get(2).expect("present"), self.inbox.get(3).expect("present"), universe, self.k);
        match pair {
            Some((i0, i1)) => {
                for (i, set) in [i0, i1].into_iter().enumerate() {
                    let t = self.inbox.value(i).map(|a| a ^ parity(&self.s, set));
                    cx.send(4 + i, bit_or_bot(t));
                }
            }
            None => {
                cx.mark_aborted();
                cx.send(4, Payload::Bot);
                cx.send(5, Payload::Bot);
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn alice(k: u32) -> Result<Block> {
    let mut b = Block::build("P4_A", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .input("a1", Side::Outer, Kind::BIT)
        .input("I0", Side::Alice, Kind::IndexSet)
        .input("I1", Side::Alice, Kind::IndexSet)
        .output("t0", Side::Alice, Kind::BIT)
        .output("t1", Side::Alice, Kind::BIT);
    for j in 0..instances(k) {
        b = b.output(format!("{j}/x"), Side::Alice, Kind::BIT);
    }
    b.computed_from(&["a0", "I0", "I1"], "t0")
        .computed_from(&["a1", "I0", "I1"], "t1")
        .finish(Sender { k, s: vec![0; instances(k)], inbox: Inbox::new(4) })
}

#[derive(Clone)]
struct Receiver {
    k: u32,
    policy: SubsetPolicy,
    inbox: Inbox,
    chosen: Option<(u64, u64)>,
    done: bool,
}

impl Receiver {
    fn got(&self) -> Vec<u64> {
        (0..instances(self.k)).map(|j| self.inbox.value(RABIN + j).unwrap_or(0)).collect()
    }
}

// b out I0 I1 t0 t1 | j/out...
impl Logic for Receiver {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Bob input")?;
        if self.done {
            return Ok(());
        }
        let n = instances(self.k);
        if self.chosen.is_none() && self.inbox.all((RABIN..RABIN + n).chain([0])) {
            let known = (0..n).filter(|&j| !self.inbox.get(RABIN + j).expect("present").is_bot()).fold(0u64, |m, j| m | 1 << j);
            match self.inbox.value(0) {
                Some(b) if popcount(known) >= self.k => {
                    let pair = choose_pair(known, full(n as u32), self.k, b, self.policy, cx);
                    self.chosen = Some(pair);
                    cx.send(2, Payload::Set(pair.0));
                    cx.send(3, Payload::Set(pair.1));
                }
                _ => {
                    cx.mark_aborted();
                    self.done = true;
                    for p in 1..4 {
                        cx.send(p, Payload::Bot);
                    }
                    return Ok(());
                }
            }
        }
        if let Some((i0, i1)) = self.chosen {
            if self.inbox.all([4, 5]) {
                let b = self.inbox.value(0).expect("checked before choosing");
                let set = if b == 0 { i0 } else { i1 };
                let out = self.inbox.value(4 + b as usize).map(|t| t ^ parity(&self.got(), set));
                cx.send(1, bit_or_bot(out));
                self.done = true;
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn bob(k: u32, policy: SubsetPolicy) -> Result<Block> {
    let mut b = Block::build("P4_B", Site::Bob)
        .input("b", Side::Outer, Kind::BIT)
        .output("out", Side::Outer, Kind::BIT)
        .output("I0", Side::Bob, Kind::IndexSet)
        .output("I1", Side::Bob, Kind::IndexSet)
        .input("t0", Side::Bob, Kind::BIT)
        .input("t1", Side::Bob, Kind::BIT);
    let mut rabin = vec!["b".to_string()];
    for j in 0..instances(k) {
        b = b.input(format!("{j}/out"), Side::Bob, Kind::BIT);
        rabin.push(format!("{j}/out"));
    }
    b.computed_from(&rabin, "I0")
        .computed_from(&rabin, "I1")
        .after(&["t0", "t1"], "out")
        .finish(Receiver { k, policy, inbox: Inbox::new(RABIN + instances(k)), chosen: None, done: false })
}

#[derive(Clone)]
struct SimAlice {
    k: u32,
    policy: SubsetPolicy,
    s: Vec<u64>,
    inbox: Inbox,
    chosen: Option<(u64, u64)>,
}

// I0 I1 t0 t1 a0 a1 | j/x...
impl Logic for SimAlice {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Alice output")?;
        let n = instances(self.k);
        if port >= RABIN && self.inbox.all(RABIN..RABIN + n) {
            // replay the Rabin erasures, then Bob's choice with b unknown
            let mut known = 0u64;
            for j in 0..n {
                let x = self.inbox.get(RABIN + j).expect("present");
                self.s[j] = x.value().unwrap_or(0);
                if !x.is_bot() && cx.bit() == 1 {
                    known |= 1 << j;
                }
            }
            let at = cx.t() + 2.0;
            if popcount(known) < self.k {
                cx.send_at(0, Payload::Bot, at);
                cx.send_at(1, Payload::Bot, at);
                cx.send(4, Payload::Bot);
                cx.send(5, Payload::Bot);
                return Ok(());
            }
            let pair = choose_pair(known, full(n as u32), self.k, 0, self.policy, cx);
            self.chosen = Some(pair);
            cx.send_at(0, Payload::Set(pair.0), at);
            cx.send_at(1, Payload::Set(pair.1), at);
        }
        if let Some((i0, i1)) = self.chosen {
            if self.inbox.all([2, 3]) {
                self.chosen = None;
                for (i, set) in [i0, i1].into_iter().enumerate() {
                    let a = self.inbox.value(2 + i).map(|t| t ^ parity(&self.s, set));
                    cx.send(4 + i, bit_or_bot(a));
                }
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_alice(k: u32, policy: SubsetPolicy) -> Result<Block> {
    let mut b = Block::build("S4_A", Site::Alice)
        .output("I0", Side::Outer, Kind::IndexSet)
        .output("I1", Side::Outer, Kind::IndexSet)
        .input("t0", Side::Outer, Kind::BIT)
        .input("t1", Side::Outer, Kind::BIT)
        .output("a0", Side::Alice, Kind::BIT)
        .output("a1", Side::Alice, Kind::BIT);
    let mut xs = Vec::new();
    for j in 0..instances(k) {
        b = b.input(format!("{j}/x"), Side::Outer, Kind::BIT);
        xs.push(format!("{j}/x"));
    }
    b.computed_from(&xs, "I0")
        .computed_from(&xs, "I1")
        .after(&["t0", "t1"], "a0")
        .after(&["t0", "t1"], "a1")
        .finish(SimAlice { k, policy, s: vec![0; instances(k)], inbox: Inbox::new(RABIN + instances(k)), chosen: None })
}

#[derive(Clone)]
struct SimBob {
    k: u32,
    delivered: u64,
    vals: Vec<u64>,
    inbox: Inbox,
    /// Known subset queried at the OT, with the time the subsets arrived.
    query: Option<(u64, u64, f64)>,
}

// I0 I1 t0 t1 b out | j/out...
impl Logic for SimBob {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for j in 0..instances(self.k) {
            let x = if cx.bit() == 1 {
                self.delivered |= 1 << j;
                self.vals[j] = cx.bit();
                Payload::bit(self.vals[j])
            } else {
                Payload::Bot
            };
            cx.send_at(RABIN + j, x, 1.0);
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Bob output")?;
        if port == 5 {
            let (c, set, t_sets) = self.query.expect("the OT answers only a query");
            let tc = msg.value().map(|a| a ^ parity(&self.vals, set));
            let other = Payload::bit(cx.bit());
            let at = cx.t().max(t_sets + 2.0);
            cx.send_at(2 + c as usize, bit_or_bot(tc), at);
            cx.send_at(3 - c as usize, other, at);
            return Ok(());
        }
        if !(port <= 1 && self.inbox.all([0, 1])) {
            return Ok(());
        }
        let at = cx.t() + 2.0;
        let universe = full(3 * self.k);
        let Some((i0, i1)) = valid_pair(self.inbox.get(0).expect("present"), self.inbox.get(1).expect("present"), universe, self.k)
        else {
            cx.send_at(2, Payload::Bot, at);
            cx.send_at(3, Payload::Bot, at);
            return Ok(());
        };
        let known = |s: u64| s & !self.delivered == 0;
        match (known(i0), known(i1)) {
            (true, true) => {
                cx.mark_aborted();
                cx.send_at(2, Payload::Bot, at);
                cx.send_at(3, Payload::Bot, at);
            }
            (false, false) => {
                let (u, v) = (cx.bit(), cx.bit());
                cx.send_at(2, Payload::bit(u), at);
                cx.send_at(3, Payload::bit(v), at);
            }
            (k0, _) => {
                let c = u64::from(!k0);
                self.query = Some((c, if k0 { i0 } else { i1 }, cx.t()));
                cx.send(4, Payload::bit(c));
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_bob(k: u32) -> Result<Block> {
    let mut b = Block::build("S4_B", Site::Bob)
        .input("I0", Side::Outer, Kind::IndexSet)
        .input("I1", Side::Outer, Kind::IndexSet)
        .output("t0", Side::Outer, Kind::BIT)
        .output("t1", Side::Outer, Kind::BIT)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT);
    for j in 0..instances(k) {
        b = b.output(format!("{j}/out"), Side::Outer, Kind::BIT);
    }
    b.after(&["I0", "I1"], "t0")
        .after(&["I0", "I1"], "t1")
        .computed_from(&["I0", "I1"], "b")
        .finish(SimBob { k, delivered: 0, vals: vec![0; instances(k)], inbox: Inbox::new(RABIN + instances(k)), query: None })
}

/// Dishonest Alice that answers honestly with fixed bits and checks the
/// unmasked output, xored with whether `I_0` holds the lowest position.
/// A subset policy that leaks `b` through that position shows up here.
#[derive(Clone)]
struct AliceProbe {
    k: u32,
    xs: Vec<usize>,
    i: [usize; 2],
    t: [usize; 2],
    b: usize,
    out: usize,
    sets: [Option<u64>; 2],
    result: Option<Payload>,
}

const PROBE_A: [u64; 2] = [1, 0];
const PROBE_B: u64 = 1;

impl Logic for AliceProbe {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for (j, &p) in self.xs.iter().enumerate() {
            cx.send(p, Payload::bit(j as u64 & 1));
        }
        cx.send(self.b, Payload::bit(PROBE_B));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if port == self.out {
            self.result = Some(msg);
            return Ok(());
        }
        let slot = usize::from(port == self.i[1]);
        self.sets[slot] = Some(msg.set().unwrap_or(u64::MAX));
        if let [Some(i0), Some(i1)] = self.sets {
            if i0 == u64::MAX || i1 == u64::MAX {
                return Ok(());
            }
            let s: Vec<u64> = (0..instances(self.k) as u64).map(|j| j & 1).collect();
            for (i, set) in [i0, i1].into_iter().enumerate() {
                cx.send(self.t[i], Payload::bit(PROBE_A[i] ^ parity(&s, set)));
            }
        }
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let correct = self.result.and_then(Payload::value) == Some(PROBE_A[PROBE_B as usize]);
        let low_in_i0 = match self.sets {
            [Some(i0), Some(i1)] if i0 != u64::MAX && i1 != u64::MAX => (i0 | i1).trailing_zeros() == i0.trailing_zeros(),
            _ => false,
        };
        cx.decide(correct ^ low_in_i0);
        Ok(())
    }

    crate::clone_logic!();
}

fn alice_probe(k: u32, real: &System) -> Result<System> {
    let m = Mirror::of(real);
    let logic = AliceProbe {
        k,
        xs: (0..instances(k)).map(|j| m.idx(Side::Alice, &format!("{j}/x"))).collect(),
        i: [m.idx(Side::Alice, "I0"), m.idx(Side::Alice, "I1")],
        t: [m.idx(Side::Alice, "t0"), m.idx(Side::Alice, "t1")],
        b: m.idx(Side::Bob, "b"),
        out: m.idx(Side::Bob, "out"),
        sets: [None; 2],
        result: None,
    };
    m.build("D", logic)
}

/// Dishonest Bob that asks for two subsets it fully knows when it can, and
/// outputs 1 iff it then recovers both of Alice's inputs.
#[derive(Clone)]
struct Decoder {
    k: u32,
    a: [usize; 2],
    outs: Vec<usize>,
    i: [usize; 2],
    t: [usize; 2],
    vals: Vec<Option<u64>>,
    pending: usize,
    sets: Option<(u64, u64)>,
    ts: [Option<u64>; 2],
}

const DECODE_A: [u64; 2] = [1, 0];

impl Logic for Decoder {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        cx.send(self.a[0], Payload::bit(DECODE_A[0]));
        cx.send(self.a[1], Payload::bit(DECODE_A[1]));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if let Some(j) = self.outs.iter().position(|&p| p == port) {
            self.vals[j] = msg.value();
            self.pending -= 1;
            if self.pending == 0 {
                let known = positions(full(3 * self.k)).filter(|&j| self.vals[j as usize].is_some());
                let unknown = positions(full(3 * self.k)).filter(|&j| self.vals[j as usize].is_none());
                let order: Vec<u32> = known.chain(unknown).collect();
                let k = self.k as usize;
                let i0 = order[..k].iter().fold(0u64, |m, &j| m | 1 << j);
                let i1 = order[k..2 * k].iter().fold(0u64, |m, &j| m | 1 << j);
                self.sets = Some((i0, i1));
                cx.send(self.i[0], Payload::Set(i0));
                cx.send(self.i[1], Payload::Set(i1));
            }
        } else {
            let slot = usize::from(port == self.t[1]);
            self.ts[slot] = msg.value();
        }
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let Some((i0, i1)) = self.sets else {
            cx.decide(false);
            return Ok(());
        };
        let both_known = positions(i0 | i1).all(|j| self.vals[j as usize].is_some());
        let s: Vec<u64> = self.vals.iter().map(|v| v.unwrap_or(0)).collect();
        let decoded = [(0, i0), (1, i1)].map(|(i, set)| self.ts[i].map(|t| t ^ parity(&s, set)));
        cx.decide(both_known && decoded == [Some(DECODE_A[0]), Some(DECODE_A[1])]);
        Ok(())
    }

    crate::clone_logic!();
}

fn decoder(k: u32, real: &System) -> Result<System> {
    let m = Mirror::of(real);
    let n = instances(k);
    let logic = Decoder {
        k,
        a: [m.idx(Side::Alice, "a0"), m.idx(Side::Alice, "a1")],
        outs: (0..n).map(|j| m.idx(Side::Bob, &format!("{j}/out"))).collect(),
        i: [m.idx(Side::Bob, "I0"), m.idx(Side::Bob, "I1")],
        t: [m.idx(Side::Bob, "t0"), m.idx(Side::Bob, "t1")],
        vals: vec![None; n],
        pending: n,
        sets: None,
        ts: [None; 2],
    };
    m.build("D", logic)
}

fn rabins(k: u32) -> Result<System> {
    let t = make_rabin(Ratio::new(1, 2), 1)?;
    indexed((0..instances(k)).map(|_| System::from(t.honest.clone())).collect())
}

fn subsets() -> Result<System> {
    channel("chI", Side::Bob, &[("I0", Kind::IndexSet), ("I1", Kind::IndexSet)])
}

fn masked() -> Result<System> {
    channel("chT", Side::Alice, &[("t0", Kind::BIT), ("t1", Kind::BIT)])
}

/// Honest abort probability `P[Binom(3k, 1/2) < k]`.
pub fn pi4_abort(k: u32) -> Result<num_rational::BigRational> {
    binomial_tail(3 * k as u64, &half(), Tail::Lt(k as u64))
}

/// Probability that Bob receives enough to know both subsets, `P[Binom(3k, 1/2) >= 2k]`.
pub fn pi4_both_known(k: u32) -> Result<num_rational::BigRational> {
    binomial_tail(3 * k as u64, &half(), Tail::Ge(2 * k as u64))
}

pub fn pi4_cases(k: u32) -> Result<Vec<ConstructionCase>> {
    pi4_cases_with(k, SubsetPolicy::Random)
}

pub fn pi4_cases_with(k: u32, policy: SubsetPolicy) -> Result<Vec<ConstructionCase>> {
    if k == 0 || 3 * k > 48 {
        return Err(Error::Input(format!("k must be in 1..=16, got {k}")));
    }
    let mu = 1.5 * k as f64;
    let [ot_h, ot_a, ot_b] = make_ot(1)?.systems();
    let resource = || -> Result<System> { rabins(k)?.join(subsets()?, &[])?.join(masked()?, &[]) };

    let real = attach(alice(k)?, attach(bob(k, policy)?, resource()?, Side::Bob)?, Side::Alice)?;
    let claim = Claim::Bounded {
        exact: pi4_abort(k)?,
        envelope: chernoff_upper(mu, 1.0 / 3.0, TailSide::Lower)?,
        note: format!("P[Binom({}, 1/2) < {k}]", 3 * k),
    };
    let honest = ConstructionCase::new("pi4", Condition::Honest, real, ot_h, claim)?.with_clause(Clause::new(
        "deliveries before subsets before masked values before output",
        &[&["Rabin.out->"], &["P4_B.I0->", "P4_B.I1->"], &["P4_A.t0->", "P4_A.t1->"], &["P4_B.out->"]],
    ));
    let honest = {
        let d = honest.script(&fixed(&honest, &[("a0", 1), ("a1", 0), ("b", 0)]), |s| s.value(Side::Bob, "out") != Some(1))?;
        // the output is a_b or ⊥ whatever the pads and subsets are
        honest.with_reference(Reference::new("abort-detecting", d).pin(&["P4_A", "P4_B"]))
    };

    let real = attach(bob(k, policy)?, resource()?, Side::Bob)?;
    let ideal = attach(sim_alice(k, policy)?, ot_a, Side::Alice)?;
    let da = ConstructionCase::new("pi4", Condition::DishonestAlice, real, ideal, Claim::Perfect)?
        .at(Side::Alice, "t0", 3.0)
        .at(Side::Alice, "t1", 3.0)
        .with_clause(Clause::new("subsets before output", &[&["P4_B.I0->", "P4_B.I1->"], &["P4_B.out->"]]));
    let probe = alice_probe(k, &da.real)?;
    let da = da.with_reference(Reference::new("answer-and-position", probe));

    let real = attach(alice(k)?, resource()?, Side::Alice)?;
    let ideal = attach(sim_bob(k)?, ot_b, Side::Bob)?;
    let claim = Claim::Bounded {
        exact: pi4_both_known(k)?,
        envelope: chernoff_upper(mu, 1.0 / 3.0, TailSide::Upper)?,
        note: format!("P[Binom({}, 1/2) >= {}]", 3 * k, 2 * k),
    };
    let db = ConstructionCase::new("pi4", Condition::DishonestBob, real, ideal, claim)?
        .with_clause(Clause::new("subsets before masked values", &[&["->chI.I0>", "->chI.I1>"], &["P4_A.t0->", "P4_A.t1->"]]));
    let dec = decoder(k, &db.real)?;
    // decoding succeeds or fails the same way for every choice of pads
    let db = db.with_reference(Reference::new("decode-both", dec).pin(&["P4_A"]));
    Ok(vec![honest, da, db])
}
