//! Bit commitment from `k` OTs.
//!
//! To commit to `x`, Alice feeds each OT a pair `(s, s ^ x)` with fresh `s`;
//! Bob picks one string of each pair at random. To open, Alice sends all the
//! pairs. Bob checks them against what he received and that every pair
//! xors to the same bit, which he outputs.

use super::common::{indexed, Inbox};
use super::pi1::fixed;
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, channel, Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::{Error, Result};
use crate::primitives::{make_bc, make_ot};
use crate::stats::ratio;
use num_rational::Ratio;

/// When scripted distinguishers open, and send opening pairs, by default.
const OPEN_AT: f64 = 3.0;

fn check_k(k: u32) -> Result<()> {
    if !(1..=16).contains(&k) {
        return Err(Error::Input(format!("k must be in 1..=16, got {k}")));
    }
    Ok(())
}

/// Bob's opening check: every pair matches the string he chose and all
/// pairs xor to the same bit. Returns that bit.
fn check_opening(choice: &[u64], got: &[Option<u64>], pairs: &[[Option<u64>; 2]]) -> Option<u64> {
    let mut bit = None;
    for ((&c, &g), p) in choice.iter().zip(got).zip(pairs) {
        let (u0, u1) = (p[0]?, p[1]?);
        if Some([u0, u1][c as usize]) != g {
            return None;
        }
        match bit {
            None => bit = Some(u0 ^ u1),
            Some(b) if b != u0 ^ u1 => return None,
            _ => {}
        }
    }
    bit
}

fn ot(i: u32) -> usize {
    2 + 2 * i as usize
}

fn pair(k: u32, i: u32) -> usize {
    2 + 2 * k as usize + 2 * i as usize
}

#[derive(Clone)]
struct Commit {
    k: u32,
    s: Vec<Option<u64>>,
    x: Option<Payload>,
    opened: bool,
}

// x open | i/a0 i/a1.. | u{i}_0 u{i}_1..
impl Logic for Commit {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if port == 0 {
            if self.x.is_some() {
                return Err(cx.order_error("second commit"));
            }
            self.x = Some(msg);
            for i in 0..self.k {
                let s = cx.bit();
                let (a0, a1) = match msg.value() {
                    Some(x) => {
                        self.s[i as usize] = Some(s);
                        (Payload::bit(s), Payload::bit(s ^ x))
                    }
                    None => (Payload::Bot, Payload::Bot),
                };
                cx.send(ot(i), a0);
                cx.send(ot(i) + 1, a1);
            }
            return Ok(());
        }
        let Some(x) = self.x else {
            return Err(cx.order_error("open before commit"));
        };
        if self.opened {
            return Err(cx.order_error("second open"));
        }
        self.opened = true;
        for i in 0..self.k {
            let (u0, u1) = match (msg, self.s[i as usize], x.value()) {
                (Payload::Open, Some(s), Some(x)) => (Payload::bit(s), Payload::bit(s ^ x)),
                _ => (Payload::Bot, Payload::Bot),
            };
            cx.send(pair(self.k, i), u0);
            cx.send(pair(self.k, i) + 1, u1);
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn ot_names(k: u32, ports: [&str; 2]) -> Vec<(String, String)> {
    (0..k).map(|i| (format!("{i}/{}", ports[0]), format!("{i}/{}", ports[1]))).collect()
}

fn pair_names(k: u32) -> Vec<(String, String)> {
    (0..k).map(|i| (format!("u{i}_0"), format!("u{i}_1"))).collect()
}

fn alice(k: u32) -> Result<Block> {
    let mut b = Block::build("P6_A", Site::Alice)
        .input("x", Side::Outer, Kind::BIT)
        .input("open", Side::Outer, Kind::Symbol);
    for (a0, a1) in ot_names(k, ["a0", "a1"]) {
        b = b.output(a0.clone(), Side::Alice, Kind::BIT).output(a1.clone(), Side::Alice, Kind::BIT);
        b = b.computed_from(&["x"], &a0).computed_from(&["x"], &a1);
    }
    for (u0, u1) in pair_names(k) {
        b = b.output(u0.clone(), Side::Alice, Kind::BIT).output(u1.clone(), Side::Alice, Kind::BIT);
        b = b.computed_from(&["x", "open"], &u0).computed_from(&["x", "open"], &u1);
    }
    b.finish(Commit { k, s: vec![None; k as usize], x: None, opened: false })
}

#[derive(Clone)]
struct Verify {
    k: u32,
    choice: Vec<u64>,
    inbox: Inbox,
    committed: bool,
    done: bool,
}

impl Verify {
    fn outs(&self) -> Vec<Option<u64>> {
        (0..self.k).map(|i| self.inbox.value(ot(i) + 1)).collect()
    }

    fn pairs(&self) -> Vec<[Option<u64>; 2]> {
        (0..self.k).map(|i| [self.inbox.value(pair(self.k, i)), self.inbox.value(pair(self.k, i) + 1)]).collect()
    }
}

// recv val | i/b i/out.. | u{i}_0 u{i}_1..
impl Logic for Verify {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for i in 0..self.k {
            self.choice[i as usize] = cx.bit();
            cx.send(ot(i), Payload::bit(self.choice[i as usize]));
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Bob input")?;
        let outs: Vec<usize> = (0..self.k).map(|i| ot(i) + 1).collect();
        if !self.committed && self.inbox.all(outs.iter().copied()) {
            self.committed = true;
            let ok = self.outs().iter().all(Option::is_some);
            cx.send(0, if ok { Payload::Recv } else { Payload::Bot });
        }
        let pairs = (0..2 * self.k as usize).map(|j| 2 + 2 * self.k as usize + j);
        if self.committed && !self.done && self.inbox.all(pairs) {
            self.done = true;
            let val = check_opening(&self.choice, &self.outs(), &self.pairs());
            if val.is_none() {
                cx.mark_aborted();
            }
            cx.send(1, val.map_or(Payload::Bot, Payload::bit));
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn bob(k: u32) -> Result<Block> {
    let mut b = Block::build("P6_B", Site::Bob)
        .output("recv", Side::Outer, Kind::Symbol)
        .output("val", Side::Outer, Kind::BIT);
    let mut outs = Vec::new();
    for (c, out) in ot_names(k, ["b", "out"]) {
        b = b.output(c, Side::Bob, Kind::BIT).input(out.clone(), Side::Bob, Kind::BIT);
        outs.push(out);
    }
    let mut all = outs.clone();
    for (u0, u1) in pair_names(k) {
        b = b.input(u0.clone(), Side::Bob, Kind::BIT).input(u1.clone(), Side::Bob, Kind::BIT);
        all.push(u0);
        all.push(u1);
    }
    b.computed_from(&outs, "recv")
        .computed_from(&all, "val")
        .finish(Verify { k, choice: vec![0; k as usize], inbox: Inbox::new(2 + 4 * k as usize), committed: false, done: false })
}

/// How the dishonest-Alice simulator picks the value it commits to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pi6Simulator {
    /// Commit to `v` with weight `2^-m_v`, where `m_v` counts OT pairs not
    /// xoring to `v`, and open with the exact probability that Bob's check
    /// passes. Within `2^-k` of the real system for every distinguisher.
    #[default]
    Weighted,
    /// Commit to the xor of the first pair and open iff a fresh run of
    /// Bob's check passes. A split commitment beats it for `k >= 2`.
    FirstPair,
}

/// Probability over Bob's choices that an opening with all pairs xoring to
/// one bit passes his check, as `matches / 2^k`; `None` if the pairs do
/// not share an xor or any part is ⊥.
fn pass_count(inputs: &[[Option<u64>; 2]], pairs: &[[Option<u64>; 2]]) -> Option<(u64, u64)> {
    let mut bit = None;
    let mut count = 1u64;
    for (a, u) in inputs.iter().zip(pairs) {
        let (u0, u1) = (u[0]?, u[1]?);
        if bit.is_some_and(|b| b != u0 ^ u1) {
            return None;
        }
        bit = Some(u0 ^ u1);
        count *= u64::from(a[0] == Some(u0)) + u64::from(a[1] == Some(u1));
    }
    Some((bit?, count))
}

#[derive(Clone)]
struct SimAlice {
    k: u32,
    rule: Pi6Simulator,
    inbox: Inbox,
    /// Committed bit with the weight of the other bit, or `None` when the
    /// commitment is deterministic.
    committed: Option<(u64, Option<(u64, u64)>)>,
    done: bool,
}

impl SimAlice {
    fn inputs(&self) -> Vec<[Option<u64>; 2]> {
        (0..self.k).map(|i| [self.inbox.value(ot(i)), self.inbox.value(ot(i) + 1)]).collect()
    }

    fn pairs(&self) -> Vec<[Option<u64>; 2]> {
        (0..self.k).map(|i| [self.inbox.value(pair(self.k, i)), self.inbox.value(pair(self.k, i) + 1)]).collect()
    }

    fn commit(&mut self, cx: &mut Cx<'_>) -> Payload {
        let inputs = self.inputs();
        if inputs.iter().flatten().any(Option::is_none) {
            return Payload::Bot;
        }
        let xors: Vec<u64> = inputs.iter().map(|a| a[0].unwrap_or(0) ^ a[1].unwrap_or(0)).collect();
        let x = match self.rule {
            Pi6Simulator::FirstPair => {
                self.committed = Some((xors[0], None));
                xors[0]
            }
            Pi6Simulator::Weighted => {
                let m1 = xors.iter().filter(|&&d| d == 0).count() as u32;
                let m0 = self.k - m1;
                if m0 == 0 || m1 == 0 {
                    let v = u64::from(m0 != 0);
                    self.committed = Some((v, None));
                    v
                } else {
                    let w = [1u64 << m1, 1u64 << m0];
                    let v = cx.weighted(&w) as u64;
                    self.committed = Some((v, Some((w[v as usize], w[0] + w[1]))));
                    v
                }
            }
        };
        Payload::bit(x)
    }

    fn opens(&mut self, x: u64, weight: Option<(u64, u64)>, cx: &mut Cx<'_>) -> bool {
        let (inputs, pairs) = (self.inputs(), self.pairs());
        match self.rule {
            Pi6Simulator::FirstPair => {
                let choice: Vec<u64> = (0..self.k).map(|_| cx.bit()).collect();
                let chosen: Vec<Option<u64>> = inputs.iter().zip(&choice).map(|(a, &c)| a[c as usize]).collect();
                check_opening(&choice, &chosen, &pairs) == Some(x)
            }
            Pi6Simulator::Weighted => {
                let Some((bit, count)) = pass_count(&inputs, &pairs) else { return false };
                if bit != x || count == 0 {
                    return false;
                }
                // pass probability count/2^k, divided by the commit probability
                let p = match weight {
                    None => Ratio::new(count, 1 << self.k),
                    Some((w, total)) => Ratio::new(count * total, (1u64 << self.k) * w),
                };
                cx.bernoulli(p)
            }
        }
    }
}

// x open | i/a0 i/a1.. | u{i}_0 u{i}_1..
impl Logic for SimAlice {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Alice output")?;
        let k = self.k as usize;
        if self.committed.is_none() && !self.done && self.inbox.all(2..2 + 2 * k) {
            let x = self.commit(cx);
            if x.is_bot() {
                self.done = true;
            }
            cx.send(0, x);
        }
        if let Some((x, weight)) = self.committed {
            if !self.done && self.inbox.all(2 + 2 * k..2 + 4 * k) {
                self.done = true;
                let ok = self.opens(x, weight, cx);
                cx.send(1, if ok { Payload::Open } else { Payload::Bot });
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_alice(k: u32, rule: Pi6Simulator) -> Result<Block> {
    let mut b = Block::build("S6_A", Site::Alice)
        .output("x", Side::Alice, Kind::BIT)
        .output("open", Side::Alice, Kind::Symbol);
    let mut ins = Vec::new();
    for (a0, a1) in ot_names(k, ["a0", "a1"]) {
        b = b.input(a0.clone(), Side::Outer, Kind::BIT).input(a1.clone(), Side::Outer, Kind::BIT);
        ins.push(a0);
        ins.push(a1);
    }
    let mut all = ins.clone();
    for (u0, u1) in pair_names(k) {
        b = b.input(u0.clone(), Side::Outer, Kind::BIT).input(u1.clone(), Side::Outer, Kind::BIT);
        all.push(u0);
        all.push(u1);
    }
    b.computed_from(&ins, "x")
        .computed_from(&all, "open")
        .finish(SimAlice { k, rule, inbox: Inbox::new(2 + 4 * k as usize), committed: None, done: false })
}

/// Answers Bob's OT queries with fresh bits and, once the commitment opens
/// to `x`, sends pairs consistent with those answers.
#[derive(Clone)]
struct SimBob {
    k: u32,
    recv: Option<(Payload, f64)>,
    choice: Vec<Option<Payload>>,
    /// String handed out for the choice, per instance.
    answer: Vec<Option<(u64, u64)>>,
    /// First string of each pair once opened, with the opened bit.
    opened: Vec<Option<(u64, u64)>>,
}

impl SimBob {
    fn step(&mut self, cx: &mut Cx<'_>) {
        let Some((recv, t_recv)) = self.recv else { return };
        for i in 0..self.k as usize {
            let Some(c) = self.choice[i] else { continue };
            if self.answer[i].is_some() {
                continue;
            }
            let out = match (recv, c.value()) {
                (Payload::Recv, Some(c)) => {
                    let s = match self.opened[i] {
                        Some((u0, x)) => u0 ^ (c & x),
                        None => cx.bit(),
                    };
                    self.answer[i] = Some((c, s));
                    Payload::bit(s)
                }
                _ => {
                    self.answer[i] = Some((2, 0));
                    Payload::Bot
                }
            };
            cx.send_at(ot(i as u32) + 1, out, cx.t().max(t_recv));
        }
    }
}

// recv val | i/b i/out.. | u{i}_0 u{i}_1..
impl Logic for SimBob {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        match port {
            0 => self.recv = Some((msg, cx.t())),
            1 => {
                for i in 0..self.k {
                    let iu = i as usize;
                    let (u0, u1) = match msg.value() {
                        Some(x) => {
                            let u0 = match self.answer[iu] {
                                Some((c, s)) if c < 2 => s ^ (c & x),
                                _ => cx.bit(),
                            };
                            self.opened[iu] = Some((u0, x));
                            (Payload::bit(u0), Payload::bit(u0 ^ x))
                        }
                        None => (Payload::Bot, Payload::Bot),
                    };
                    cx.send(pair(self.k, i), u0);
                    cx.send(pair(self.k, i) + 1, u1);
                }
            }
            p => {
                let i = (p - 2) / 2;
                if self.choice[i].is_some() {
                    return Err(cx.order_error("second choice bit"));
                }
                self.choice[i] = Some(msg);
            }
        }
        self.step(cx);
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_bob(k: u32) -> Result<Block> {
    let mut b = Block::build("S6_B", Site::Bob)
        .input("recv", Side::Bob, Kind::Symbol)
        .input("val", Side::Bob, Kind::BIT);
    for (c, out) in ot_names(k, ["b", "out"]) {
        b = b.input(c.clone(), Side::Outer, Kind::BIT).output(out.clone(), Side::Outer, Kind::BIT);
        b = b.after(&["recv", c.as_str()], &out);
    }
    for (u0, u1) in pair_names(k) {
        b = b.output(u0.clone(), Side::Outer, Kind::BIT).output(u1.clone(), Side::Outer, Kind::BIT);
        b = b.computed_from(&["val"], &u0).computed_from(&["val"], &u1);
    }
    let n = k as usize;
    b.finish(SimBob { k, recv: None, choice: vec![None; n], answer: vec![None; n], opened: vec![None; n] })
}

/// Dishonest Alice that commits to 0 through every OT and then opens with
/// the first string of each pair flipped, claiming 1. Outputs 1 iff Bob
/// accepts the value 1.
pub fn pi6_binding_attack(k: u32) -> Result<System> {
    check_k(k)?;
    let real = attach(bob(k)?, resource(k)?, Side::Bob)?;
    binding_attack(&real, k)
}

fn binding_attack(real: &System, k: u32) -> Result<System> {
    let mut values: Vec<(String, u64)> = Vec::new();
    for (u0, _) in pair_names(k) {
        values.push((u0, 1));
    }
    let mut s = crate::engine::Script::against(real);
    for p in real.ports().into_iter().filter(|p| p.dir == crate::engine::Dir::In) {
        let v = values.iter().find(|(n, _)| *n == p.name).map_or(0, |(_, v)| *v);
        let t = if p.name.starts_with('u') { OPEN_AT } else { 0.0 };
        s = s.feed(p.side, &p.name, Payload::bit(v), t)?;
    }
    s.decide(|seen| seen.value(Side::Bob, "val") == Some(1)).build()
}

fn resource(k: u32) -> Result<System> {
    let [ot_h, _, _] = make_ot(1)?.systems();
    let ots = indexed((0..k).map(|_| ot_h.clone()).collect())?;
    let names = pair_names(k);
    let wires: Vec<(&str, Kind)> = names.iter().flat_map(|(a, b)| [(a.as_str(), Kind::BIT), (b.as_str(), Kind::BIT)]).collect();
    ots.join(channel("chU", Side::Alice, &wires)?, &[])
}

pub fn pi6_cases(k: u32) -> Result<Vec<ConstructionCase>> {
    pi6_cases_with(k, Pi6Simulator::Weighted)
}

pub fn pi6_cases_with(k: u32, rule: Pi6Simulator) -> Result<Vec<ConstructionCase>> {
    check_k(k)?;
    let [bc_h, bc_a, bc_b] = make_bc()?.systems();

    let real = attach(alice(k)?, attach(bob(k)?, resource(k)?, Side::Bob)?, Side::Alice)?;
    let honest = ConstructionCase::new("pi6", Condition::Honest, real, bc_h, Claim::Perfect)?
        .at(Side::Alice, "open", OPEN_AT)
        .with_clause(Clause::new(
            "commit, OT answers, opening, output",
            &[&["->P6_A.x"], &["OT.out->"], &["P6_A.u"], &["P6_B.val->"]],
        ));
    let honest = {
        let d = honest.script(&fixed(&honest, &[("x", 1)]), |s| s.value(Side::Bob, "val") != Some(1))?;
        honest.with_reference(Reference::new("wrong-value", d))
    };

    let real = attach(bob(k)?, resource(k)?, Side::Bob)?;
    let ideal = attach(sim_alice(k, rule)?, bc_a, Side::Alice)?;
    let mut da = ConstructionCase::new(
        "pi6",
        Condition::DishonestAlice,
        real,
        ideal,
        Claim::Bounded { exact: ratio(1, 1 << k), envelope: 0.5f64.powi(k as i32), note: format!("2^-{k}") },
    )?
    .with_clause(Clause::new("OT answers before verdict", &[&["OT.out->"], &["P6_B.val->"]]));
    for (u0, u1) in pair_names(k) {
        da = da.at(Side::Alice, &u0, OPEN_AT).at(Side::Alice, &u1, OPEN_AT);
    }
    let attack = binding_attack(&da.real, k)?;
    let da = da.with_reference(Reference::new("flip-one-per-pair", attack));

    let real = attach(alice(k)?, resource(k)?, Side::Alice)?;
    let ideal = attach(sim_bob(k)?, bc_b, Side::Bob)?;
    let db = ConstructionCase::new("pi6", Condition::DishonestBob, real, ideal, Claim::Perfect)?
        .at(Side::Alice, "open", OPEN_AT)
        .with_clause(Clause::new("commit before opening", &[&["->P6_A.x"], &["P6_A.u"]]));
    let db = {
        let d = db.script(&fixed(&db, &[("x", 1)]), |s| {
            // the chosen strings xor-ed together before the opening
            let outs: Vec<u64> = (0..16).filter_map(|i| s.value(Side::Bob, &format!("{i}/out"))).collect();
            outs.iter().fold(0, |a, b| a ^ b) == 1
        })?;
        db.with_reference(Reference::new("xor-of-answers", d))
    };
    Ok(vec![honest, da, db])
}
