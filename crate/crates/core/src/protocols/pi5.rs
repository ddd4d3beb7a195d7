//! OT from `2n` bit commitments and BB84 states.
//!
//! Alice sends `n` BB84 states. Bob measures each in a random basis and
//! commits to basis and outcome. Alice picks a test set `T` of size `h`; Bob
//! opens those commitments and Alice checks the outcomes where the bases
//! agree. Alice then announces her bases on the rest `R`, and the protocol
//! finishes like the Rabin construction with subsets of size `k/3` inside `R`.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::common::{bit_or_bot, choose_pair, driving, full, indexed, parity, popcount, positions, valid_pair, Inbox, Mirror, SubsetPolicy};
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, channel, Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::{Error, Result};
use crate::primitives::{make_bc_by, make_ot};
use crate::quantum::Basis;
use crate::engine::binomial;
use crate::stats::{binomial_tail, chernoff_upper, half, hypergeometric_pmf, ratio, Tail, TailSide};

/// First per-qubit port in every box below; qubits, then `2n` commitment
/// ports of each kind follow.
const BASE: usize = 8;

/// Checked sizes for `n` states: `(k, h, interval)` with `k = h = n/2`.
pub fn pi5_check_params(n: u32) -> Result<(u32, u32, u32)> {
    if !n.is_multiple_of(2) || !(6..=48).contains(&n) || !(n / 2).is_multiple_of(3) {
        return Err(Error::Input(format!("n must be even, in 6..=48, with 3 | n/2; got {n}")));
    }
    Ok((n / 2, n / 2, n / 6))
}

fn bits_of(v: u64, i: u32) -> u64 {
    v >> i & 1
}

#[derive(Clone)]
struct Sender {
    n: u32,
    size: u32,
    x: Vec<u64>,
    theta: u64,
    inbox: Inbox,
    test: Option<u64>,
    passed: Option<bool>,
    done: bool,
}

impl Sender {
    fn recv(&self, j: usize) -> usize {
        BASE + self.n as usize + j
    }

    fn val(&self, j: usize) -> usize {
        BASE + 3 * self.n as usize + j
    }

    fn abort(&mut self, cx: &mut Cx<'_>, ports: &[usize]) {
        cx.mark_aborted();
        for &p in ports {
            cx.send(p, Payload::Bot);
        }
        self.done = true;
    }

    fn step(&mut self, cx: &mut Cx<'_>) {
        let n = self.n as usize;
        if self.test.is_none() && self.inbox.all((0..2 * n).map(|j| self.recv(j))) {
            let t = cx.subset(self.n, self.n / 2);
            self.test = Some(t);
            cx.send(2, Payload::Set(t));
        }
        let Some(t) = self.test else { return };
        if self.passed.is_none() {
            let opened: Vec<usize> = positions(t).flat_map(|i| [self.val(i as usize), self.val(n + i as usize)]).collect();
            if !self.inbox.all(opened) {
                return;
            }
            let ok = positions(t).all(|i| {
                let i = i as usize;
                match (self.inbox.value(self.val(i)), self.inbox.value(self.val(n + i))) {
                    (Some(xb), Some(tb)) => tb != bits_of(self.theta, i as u32) || xb == self.x[i],
                    _ => false,
                }
            });
            self.passed = Some(ok);
            if !ok {
                self.abort(cx, &[3, 4, 5]);
                return;
            }
            let rest = full(self.n) & !t;
            cx.send(3, Payload::bits(self.theta & rest, self.n as u8));
        }
        if self.done || !self.inbox.all([0, 1, 6, 7]) {
            return;
        }
        let rest = full(self.n) & !t;
        match valid_pair(self.inbox.get(6).expect("present"), self.inbox.get(7).expect("present"), rest, self.size) {
            Some((i0, i1)) => {
                for (i, set) in [i0, i1].into_iter().enumerate() {
                    let v = self.inbox.value(i).map(|a| a ^ parity(&self.x, set));
                    cx.send(4 + i, bit_or_bot(v));
                }
                self.done = true;
            }
            None => self.abort(cx, &[4, 5]),
        }
    }
}

// a0 a1 | T theta t0 t1 I0 I1 | q.. | j/recv.. | j/val..
impl Logic for Sender {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for i in 0..self.n as usize {
            self.x[i] = cx.bit();
            let th = cx.bit();
            self.theta |= th << i;
            let q = cx.prepare(self.x[i] as u8, Basis::from_bit(th));
            cx.send(BASE + i, q);
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Alice input")?;
        self.step(cx);
        Ok(())
    }

    crate::clone_logic!();
}

fn qubit_names(n: u32) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn alice(n: u32) -> Result<Block> {
    let (_, _, size) = pi5_check_params(n)?;
    let mut b = Block::build("P5_A", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .input("a1", Side::Outer, Kind::BIT)
        .output("T", Side::Alice, Kind::IndexSet)
        .output("theta", Side::Alice, Kind::Bits(n as u8))
        .output("t0", Side::Alice, Kind::BIT)
        .output("t1", Side::Alice, Kind::BIT)
        .input("I0", Side::Alice, Kind::IndexSet)
        .input("I1", Side::Alice, Kind::IndexSet);
    for q in qubit_names(n) {
        b = b.output(q, Side::Alice, Kind::Qubit);
    }
    let recv: Vec<String> = (0..2 * n).map(|j| format!("{j}/recv")).collect();
    let val: Vec<String> = (0..2 * n).map(|j| format!("{j}/val")).collect();
    for r in &recv {
        b = b.input(r.clone(), Side::Alice, Kind::Symbol);
    }
    for v in &val {
        b = b.input(v.clone(), Side::Alice, Kind::BIT);
    }
    b.computed_from(&recv, "T")
        .after(&val, "theta")
        .after(&["a0", "I0", "I1"], "t0")
        .after(&["a1", "I0", "I1"], "t1")
        .finish(Sender {
            n,
            size,
            x: vec![0; n as usize],
            theta: 0,
            inbox: Inbox::new(BASE + 5 * n as usize),
            test: None,
            passed: None,
            done: false,
        })
}

#[derive(Clone)]
struct Receiver {
    n: u32,
    size: u32,
    policy: SubsetPolicy,
    xbar: Vec<u64>,
    thbar: u64,
    measured: usize,
    inbox: Inbox,
    test: Option<u64>,
    chosen: Option<(u64, u64)>,
    done: bool,
}

impl Receiver {
    fn abort(&mut self, cx: &mut Cx<'_>) {
        cx.mark_aborted();
        for p in [1, 6, 7] {
            cx.send(p, Payload::Bot);
        }
        self.done = true;
    }

    fn step(&mut self, cx: &mut Cx<'_>) {
        let n = self.n as usize;
        if self.done {
            return;
        }
        if self.test.is_none() && self.inbox.has(2) && self.measured == n {
            let Some(t) = self.inbox.get(2).and_then(Payload::set) else {
                for j in 0..2 * n {
                    cx.send(BASE + 3 * n + j, Payload::Bot);
                }
                return self.abort(cx);
            };
            let t = t & full(self.n);
            self.test = Some(t);
            for j in 0..2 * n {
                let open = if t >> (j % n) & 1 == 1 { Payload::Open } else { Payload::Bot };
                cx.send(BASE + 3 * n + j, open);
            }
        }
        let Some(t) = self.test else { return };
        if self.chosen.is_none() {
            if !self.inbox.all([0, 3]) {
                return;
            }
            let (Some(b), Some(theta)) = (self.inbox.value(0), self.inbox.value(3)) else {
                return self.abort(cx);
            };
            let rest = full(self.n) & !t;
            let known = positions(rest).filter(|&i| bits_of(theta, i) == bits_of(self.thbar, i)).fold(0u64, |m, i| m | 1 << i);
            if popcount(known) < self.size {
                return self.abort(cx);
            }
            let pair = choose_pair(known, rest, self.size, b, self.policy, cx);
            self.chosen = Some(pair);
            cx.send(6, Payload::Set(pair.0));
            cx.send(7, Payload::Set(pair.1));
        }
        if let Some((i0, i1)) = self.chosen {
            if self.inbox.all([4, 5]) {
                let b = self.inbox.value(0).expect("checked before choosing");
                let set = if b == 0 { i0 } else { i1 };
                let out = self.inbox.value(4 + b as usize).map(|v| v ^ parity(&self.xbar, set));
                cx.send(1, bit_or_bot(out));
                self.done = true;
            }
        }
    }
}

// b out | T theta t0 t1 I0 I1 | q.. | j/x.. | j/open..
impl Logic for Receiver {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Bob input")?;
        let n = self.n as usize;
        if (BASE..BASE + n).contains(&port) {
            let i = port - BASE;
            let th = cx.bit();
            let x = match msg {
                Payload::Qubit(h) => u64::from(cx.measure(h, Basis::from_bit(th))?),
                _ => cx.bit(),
            };
            self.thbar |= th << i;
            self.xbar[i] = x;
            self.measured += 1;
            cx.send(BASE + n + i, Payload::bit(x));
            cx.send(BASE + 2 * n + i, Payload::bit(th));
        }
        self.step(cx);
        Ok(())
    }

    crate::clone_logic!();
}

fn bob(n: u32, policy: SubsetPolicy) -> Result<Block> {
    let (_, _, size) = pi5_check_params(n)?;
    let mut b = Block::build("P5_B", Site::Bob)
        .input("b", Side::Outer, Kind::BIT)
        .output("out", Side::Outer, Kind::BIT)
        .input("T", Side::Bob, Kind::IndexSet)
        .input("theta", Side::Bob, Kind::Bits(n as u8))
        .input("t0", Side::Bob, Kind::BIT)
        .input("t1", Side::Bob, Kind::BIT)
        .output("I0", Side::Bob, Kind::IndexSet)
        .output("I1", Side::Bob, Kind::IndexSet);
    for q in qubit_names(n) {
        b = b.input(q, Side::Bob, Kind::Qubit);
    }
    for j in 0..2 * n {
        b = b.output(format!("{j}/x"), Side::Bob, Kind::BIT);
    }
    for j in 0..2 * n {
        b = b.output(format!("{j}/open"), Side::Bob, Kind::Symbol);
    }
    for j in 0..2 * n {
        b = b.after(&["T"], &format!("{j}/open"));
        let q = format!("q{}", j % n);
        b = b.computed_from(&[q], &format!("{j}/x"));
    }
    b.after(&["b", "theta"], "I0")
        .after(&["b", "theta"], "I1")
        .after(&["t0", "t1"], "out")
        .finish(Receiver {
            n,
            size,
            policy,
            xbar: vec![0; n as usize],
            thbar: 0,
            measured: 0,
            inbox: Inbox::new(BASE + 5 * n as usize),
            test: None,
            chosen: None,
            done: false,
        })
}

/// Stands in for honest Bob against a dishonest Alice. It fakes the
/// commitments, measures only when it has to, and measures the untested
/// states in Alice's announced bases so it can unmask both inputs.
#[derive(Clone)]
struct SimAlice {
    n: u32,
    size: u32,
    policy: SubsetPolicy,
    inbox: Inbox,
    last_q: f64,
    test: Option<u64>,
    chosen: Option<(u64, u64)>,
    s: Vec<u64>,
    done: bool,
}

impl SimAlice {
    fn abort(&mut self, cx: &mut Cx<'_>, at: f64) {
        cx.send_at(4, Payload::Bot, at);
        cx.send_at(5, Payload::Bot, at);
        cx.send(6, Payload::Bot);
        cx.send(7, Payload::Bot);
        self.done = true;
    }

    fn outcome(&mut self, i: usize, basis: Basis, cx: &mut Cx<'_>) -> Result<u64> {
        Ok(match self.inbox.get(BASE + i) {
            Some(Payload::Qubit(h)) => u64::from(cx.measure(h, basis)?),
            _ => cx.bit(),
        })
    }

    fn step(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let n = self.n as usize;
        if self.done {
            return Ok(());
        }
        if self.test.is_none() && self.inbox.has(0) && self.inbox.all(BASE..BASE + n) {
            let at = cx.t().max(self.last_q) + 2.0;
            let Some(t) = self.inbox.get(0).and_then(Payload::set) else {
                for j in 0..2 * n {
                    cx.send_at(BASE + 3 * n + j, Payload::Bot, at);
                }
                self.abort(cx, at);
                return Ok(());
            };
            let t = t & full(self.n);
            self.test = Some(t);
            for i in 0..n {
                let (x, th) = if t >> i & 1 == 1 {
                    let th = cx.bit();
                    (Payload::bit(self.outcome(i, Basis::from_bit(th), cx)?), Payload::bit(th))
                } else {
                    (Payload::Bot, Payload::Bot)
                };
                cx.send_at(BASE + 3 * n + i, x, at);
                cx.send_at(BASE + 4 * n + i, th, at);
            }
        }
        let Some(t) = self.test else { return Ok(()) };
        if self.chosen.is_none() {
            if !self.inbox.has(1) {
                return Ok(());
            }
            let at = cx.t() + 2.0;
            let Some(theta) = self.inbox.value(1) else {
                self.abort(cx, at);
                return Ok(());
            };
            let rest = full(self.n) & !t;
            let mut known = 0u64;
            for i in positions(rest) {
                if cx.bit() == 1 {
                    known |= 1 << i;
                }
                self.s[i as usize] = self.outcome(i as usize, Basis::from_bit(bits_of(theta, i)), cx)?;
            }
            if popcount(known) < self.size {
                self.abort(cx, at);
                return Ok(());
            }
            let pair = choose_pair(known, rest, self.size, 0, self.policy, cx);
            self.chosen = Some(pair);
            cx.send_at(4, Payload::Set(pair.0), at);
            cx.send_at(5, Payload::Set(pair.1), at);
        }
        if let Some((i0, i1)) = self.chosen {
            if self.inbox.all([2, 3]) {
                for (i, set) in [i0, i1].into_iter().enumerate() {
                    let a = self.inbox.value(2 + i).map(|v| v ^ parity(&self.s, set));
                    cx.send(6 + i, bit_or_bot(a));
                }
                self.done = true;
            }
        }
        Ok(())
    }
}

// T theta t0 t1 I0 I1 a0 a1 | q.. | j/recv.. | j/val..
impl Logic for SimAlice {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, "Alice output")?;
        let n = self.n as usize;
        if (BASE..BASE + n).contains(&port) {
            let i = port - BASE;
            self.last_q = self.last_q.max(cx.t());
            cx.send_at(BASE + n + i, Payload::Recv, cx.t() + 2.0);
            cx.send_at(BASE + 2 * n + i, Payload::Recv, cx.t() + 2.0);
        }
        self.step(cx)
    }

    crate::clone_logic!();
}

fn sim_alice(n: u32, policy: SubsetPolicy) -> Result<Block> {
    let (_, _, size) = pi5_check_params(n)?;
    let mut b = Block::build("S5_A", Site::Alice)
        .input("T", Side::Outer, Kind::IndexSet)
        .input("theta", Side::Outer, Kind::Bits(n as u8))
        .input("t0", Side::Outer, Kind::BIT)
        .input("t1", Side::Outer, Kind::BIT)
        .output("I0", Side::Outer, Kind::IndexSet)
        .output("I1", Side::Outer, Kind::IndexSet)
        .output("a0", Side::Alice, Kind::BIT)
        .output("a1", Side::Alice, Kind::BIT);
    let qs = qubit_names(n);
    for q in &qs {
        b = b.input(q.clone(), Side::Outer, Kind::Qubit);
    }
    for j in 0..2 * n {
        b = b.output(format!("{j}/recv"), Side::Outer, Kind::Symbol);
    }
    for j in 0..2 * n {
        b = b.output(format!("{j}/val"), Side::Outer, Kind::BIT);
    }
    for j in 0..2 * n {
        let q = [qs[(j % n) as usize].clone()];
        b = b.computed_from(&q, &format!("{j}/recv")).after(&["T"], &format!("{j}/val"));
    }
    b.after(&["theta"], "I0")
        .after(&["theta"], "I1")
        .after(&["t0", "t1"], "a0")
        .after(&["t0", "t1"], "a1")
        .finish(SimAlice {
            n,
            size,
            policy,
            inbox: Inbox::new(BASE + 5 * n as usize),
            last_q: 0.0,
            test: None,
            chosen: None,
            s: vec![0; n as usize],
            done: false,
        })
}

/// Stands in for honest Alice against a dishonest Bob. It reads Bob's
/// commitments as they are made and, once the subsets arrive, checks which
/// of them Bob can know from how he measured the states.
#[derive(Clone)]
struct SimBob {
    n: u32,
    size: u32,
    x: Vec<u64>,
    theta: u64,
    handles: Vec<u32>,
    committed: Vec<Option<Payload>>,
    opened: Vec<Option<(Payload, f64)>>,
    last_commit: f64,
    pending: [Option<Payload>; 2],
    test: Option<u64>,
    /// Time the announcement of bases reaches Bob, once the test passed.
    passed_at: Option<f64>,
    subsets: Option<(u64, u64, f64)>,
    query: Option<(usize, u64, f64)>,
    done: bool,
    failed: bool,
}

impl SimBob {
    fn step(&mut self, cx: &mut Cx<'_>) {
        let n = self.n as usize;
        if self.done || self.failed {
            return;
        }
        if self.test.is_none() && self.committed.iter().all(Option::is_some) {
            let t = cx.subset(self.n, self.n / 2);
            self.test = Some(t);
            cx.send_at(0, Payload::Set(t), self.last_commit + 2.0);
        }
        let Some(t) = self.test else { return };
        if self.passed_at.is_none() {
            let needed: Vec<usize> = positions(t).flat_map(|i| [i as usize, n + i as usize]).collect();
            if !needed.iter().all(|&j| self.opened[j].is_some()) {
                return;
            }
            let value = |j: usize| match (self.committed[j], self.opened[j]) {
                (Some(x), Some((Payload::Open, _))) => x.value(),
                _ => None,
            };
            let ok = positions(t).all(|i| {
                let i = i as usize;
                match (value(i), value(n + i)) {
                    (Some(xb), Some(tb)) => tb != bits_of(self.theta, i as u32) || xb == self.x[i],
                    _ => false,
                }
            });
            let last_open = needed.iter().map(|&j| self.opened[j].map_or(0.0, |(_, t)| t)).fold(0.0, f64::max);
            let at = (self.last_commit + 1.0).max(last_open + 1.0) + 1.0;
            if !ok {
                cx.mark_aborted();
                for p in [1, 2, 3] {
                    cx.send_at(p, Payload::Bot, at);
                }
                self.failed = true;
                return;
            }
            let rest = full(self.n) & !t;
            cx.send_at(1, Payload::bits(self.theta & rest, self.n as u8), at);
            self.passed_at = Some(at);
        }
        let Some(theta_at) = self.passed_at else { return };
        let Some((i0, i1, t_i)) = self.subsets else { return };
        if self.query.is_some() {
            return;
        }
        let at = (t_i + 2.0).max(theta_at);
        let rest = full(self.n) & !t;
        let Some((i0, i1)) = valid_pair(Payload::Set(i0), Payload::Set(i1), rest, self.size) else {
            cx.mark_aborted();
            cx.send_at(2, Payload::Bot, at);
            cx.send_at(3, Payload::Bot, at);
            self.done = true;
            return;
        };
        let knows = |set: u64| {
            positions(set).all(|i| match cx.measured_in(self.handles[i as usize]) {
                None => true,
                Some(b) => b.bit() == bits_of(self.theta, i),
            })
        };
        match (knows(i0), knows(i1)) {
            (true, true) => {
                cx.mark_aborted();
                let at = (t_i + 1.0).max(theta_at);
                cx.send_at(2, Payload::Bot, at);
                cx.send_at(3, Payload::Bot, at);
                self.done = true;
            }
            (false, false) => {
                let (u, v) = (cx.bit(), cx.bit());
                cx.send_at(2, Payload::bit(u), at);
                cx.send_at(3, Payload::bit(v), at);
                self.done = true;
            }
            (k0, _) => {
                let c = usize::from(!k0);
                self.query = Some((c, if k0 { i0 } else { i1 }, at));
                cx.send(6, Payload::bit(c as u64));
            }
        }
    }
}

// T theta t0 t1 I0 I1 b out | q.. | j/x.. | j/open..
impl Logic for SimBob {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for i in 0..self.n as usize {
            self.x[i] = cx.bit();
            let th = cx.bit();
            self.theta |= th << i;
            let q = cx.prepare(self.x[i] as u8, Basis::from_bit(th));
            if let Payload::Qubit(h) = q {
                self.handles[i] = h;
            }
            cx.send_at(BASE + i, q, 1.0);
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        let n = self.n as usize;
        match port {
            4 | 5 => {
                if self.subsets.is_some() || self.query.is_some() {
                    return Err(cx.order_error("second pair of subsets"));
                }
                let slot = &mut self.pending[port - 4];
                if slot.is_some() {
                    return Err(cx.order_error("second message on a subset port"));
                }
                *slot = Some(msg);
                if let [Some(a), Some(b)] = self.pending {
                    let (a, b) = (a.set().unwrap_or(u64::MAX), b.set().unwrap_or(u64::MAX));
                    self.subsets = Some((a, b, cx.t()));
                }
            }
            7 => {
                let (c, set, at) = self.query.expect("the OT answers only a query");
                let tc = msg.value().map(|a| a ^ parity(&self.x, set));
                let other = Payload::bit(cx.bit());
                cx.send_at(2 + c, bit_or_bot(tc), at.max(cx.t()));
                cx.send_at(3 - c, other, at.max(cx.t()));
                self.done = true;
            }
            p if (BASE + n..BASE + 3 * n).contains(&p) => {
                let j = p - BASE - n;
                if self.committed[j].is_some() {
                    return Err(cx.order_error(format!("second commitment {j}")));
                }
                self.committed[j] = Some(msg);
                self.last_commit = self.last_commit.max(cx.t());
            }
            p if p >= BASE + 3 * n => {
                let j = p - BASE - 3 * n;
                if self.committed[j].is_none() {
                    return Err(cx.order_error(format!("open before commit {j}")));
                }
                if self.opened[j].is_some() {
                    return Err(cx.order_error(format!("second open {j}")));
                }
                self.opened[j] = Some((msg, cx.t()));
            }
            _ => {}
        }
        self.step(cx);
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_bob(n: u32) -> Result<Block> {
    let (_, _, size) = pi5_check_params(n)?;
    let mut b = Block::build("S5_B", Site::Bob)
        .output("T", Side::Outer, Kind::IndexSet)
        .output("theta", Side::Outer, Kind::Bits(n as u8))
        .output("t0", Side::Outer, Kind::BIT)
        .output("t1", Side::Outer, Kind::BIT)
        .input("I0", Side::Outer, Kind::IndexSet)
        .input("I1", Side::Outer, Kind::IndexSet)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT);
    for q in qubit_names(n) {
        b = b.output(q, Side::Outer, Kind::Qubit);
    }
    let xs: Vec<String> = (0..2 * n).map(|j| format!("{j}/x")).collect();
    let opens: Vec<String> = (0..2 * n).map(|j| format!("{j}/open")).collect();
    for x in &xs {
        b = b.input(x.clone(), Side::Outer, Kind::BIT);
    }
    for o in &opens {
        b = b.input(o.clone(), Side::Outer, Kind::Symbol);
    }
    b.computed_from(&xs, "T")
        .after(&opens, "theta")
        .after(&["I0", "I1"], "t0")
        .after(&["I0", "I1"], "t1")
        .computed_from(&["I0", "I1"], "b")
        .finish(SimBob {
            n,
            size,
            x: vec![0; n as usize],
            theta: 0,
            handles: vec![0; n as usize],
            committed: vec![None; 2 * n as usize],
            opened: vec![None; 2 * n as usize],
            last_commit: 0.0,
            pending: [None; 2],
            test: None,
            passed_at: None,
            subsets: None,
            query: None,
            done: false,
            failed: false,
        })
}

/// What a cheating receiver counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pi5Goal {
    /// Alice accepts the test.
    PassTest,
    /// Both of Alice's inputs are recovered.
    DecodeBoth,
}

const CHEAT_A: [u64; 2] = [1, 0];

/// Dishonest Bob that leaves the first `skip` states unmeasured and commits
/// random values for them, measures the rest honestly, and after the bases
/// are announced measures the skipped untested states correctly. It then
/// asks for subsets made of known positions first.
#[derive(Clone)]
struct Cheater {
    n: u32,
    size: u32,
    skip: u32,
    goal: Pi5Goal,
    a: [usize; 2],
    q: Vec<usize>,
    x: Vec<usize>,
    open: Vec<usize>,
    t_set: usize,
    theta: usize,
    t: [usize; 2],
    i: [usize; 2],
    handles: Vec<Option<u32>>,
    xbar: Vec<u64>,
    thbar: u64,
    test: Option<u64>,
    passed: bool,
    known: u64,
    sets: Option<(u64, u64)>,
    ts: [Option<u64>; 2],
}

impl Logic for Cheater {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        cx.send(self.a[0], Payload::bit(CHEAT_A[0]));
        cx.send(self.a[1], Payload::bit(CHEAT_A[1]));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        let n = self.n as usize;
        if let Some(i) = self.q.iter().position(|&p| p == port) {
            let th = cx.bit();
            let h = match msg {
                Payload::Qubit(h) => Some(h),
                _ => None,
            };
            let x = match h {
                Some(h) if i as u32 >= self.skip => u64::from(cx.measure(h, Basis::from_bit(th))?),
                _ => cx.bit(),
            };
            self.handles[i] = h;
            self.xbar[i] = x;
            self.thbar |= th << i;
            cx.send(self.x[i], Payload::bit(x));
            cx.send(self.x[n + i], Payload::bit(th));
        } else if port == self.t_set {
            let t = msg.set().unwrap_or(0) & full(self.n);
            self.test = Some(t);
            for j in 0..2 * n {
                let o = if t >> (j % n) & 1 == 1 { Payload::Open } else { Payload::Bot };
                cx.send(self.open[j], o);
            }
        } else if port == self.theta {
            let (Some(theta), Some(t)) = (msg.value(), self.test) else { return Ok(()) };
            self.passed = true;
            let rest = full(self.n) & !t;
            for i in positions(rest) {
                let iu = i as usize;
                let basis = bits_of(theta, i);
                if i < self.skip {
                    if let Some(h) = self.handles[iu] {
                        self.xbar[iu] = u64::from(cx.measure(h, Basis::from_bit(basis))?);
                        self.known |= 1 << i;
                    }
                } else if bits_of(self.thbar, i) == basis {
                    self.known |= 1 << i;
                }
            }
            let order: Vec<u32> = positions(rest & self.known).chain(positions(rest & !self.known)).collect();
            let s = self.size as usize;
            let mask = |v: &[u32]| v.iter().fold(0u64, |m, &i| m | 1 << i);
            let (i0, i1) = (mask(&order[..s]), mask(&order[s..2 * s]));
            self.sets = Some((i0, i1));
            cx.send(self.i[0], Payload::Set(i0));
            cx.send(self.i[1], Payload::Set(i1));
        } else if port == self.t[0] || port == self.t[1] {
            self.ts[usize::from(port == self.t[1])] = msg.value();
        }
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let win = match self.goal {
            Pi5Goal::PassTest => self.passed,
            Pi5Goal::DecodeBoth => self.sets.is_some_and(|(i0, i1)| {
                [(0, i0), (1, i1)].iter().all(|&(k, set)| self.ts[k].map(|t| t ^ parity(&self.xbar, set)) == Some(CHEAT_A[k]))
            }),
        };
        cx.decide(win);
        Ok(())
    }

    crate::clone_logic!();
}

/// A cheating-receiver distinguisher for the dishonest-Bob case with `n`
/// states, skipping the first `skip` measurements.
pub fn pi5_cheater(n: u32, skip: u32, goal: Pi5Goal) -> Result<System> {
    let real = attach(alice(n)?, resource(n)?, Side::Alice)?;
    cheater(&real, n, skip, goal)
}

fn cheater(real: &System, n: u32, skip: u32, goal: Pi5Goal) -> Result<System> {
    let (_, _, size) = pi5_check_params(n)?;
    if skip > n {
        return Err(Error::Input(format!("cannot skip {skip} of {n} states")));
    }
    let m = Mirror::of(real);
    let bob = |name: &str| m.idx(Side::Bob, name);
    let logic = Cheater {
        n,
        size,
        skip,
        goal,
        a: [m.idx(Side::Alice, "a0"), m.idx(Side::Alice, "a1")],
        q: qubit_names(n).iter().map(|q| bob(q)).collect(),
        x: (0..2 * n).map(|j| bob(&format!("{j}/x"))).collect(),
        open: (0..2 * n).map(|j| bob(&format!("{j}/open"))).collect(),
        t_set: bob("T"),
        theta: bob("theta"),
        t: [bob("t0"), bob("t1")],
        i: [bob("I0"), bob("I1")],
        handles: vec![None; n as usize],
        xbar: vec![0; n as usize],
        thbar: 0,
        test: None,
        passed: false,
        known: 0,
        sets: None,
        ts: [None; 2],
    };
    m.build("D", logic)
}

fn resource(n: u32) -> Result<System> {
    let bc = make_bc_by(Side::Bob)?;
    let bcs = indexed((0..2 * n).map(|_| System::from(bc.honest.clone())).collect())?;
    let qs = qubit_names(n);
    let wires: Vec<(&str, Kind)> = qs.iter().map(|q| (q.as_str(), Kind::Qubit)).collect();
    let states = channel("chQ", Side::Alice, &wires)?;
    let down = channel(
        "chA",
        Side::Alice,
        &[("T", Kind::IndexSet), ("theta", Kind::Bits(n as u8)), ("t0", Kind::BIT), ("t1", Kind::BIT)],
    )?;
    let up = channel("chB", Side::Bob, &[("I0", Kind::IndexSet), ("I1", Kind::IndexSet)])?;
    states.join(bcs, &[])?.join(down, &[])?.join(up, &[])
}

/// Honest abort probability by enumerating which bases agree and the test
/// set: Bob aborts when fewer than `k/3` untested positions agree.
pub fn pi5_honest_abort(n: u32) -> Result<BigRational> {
    let (_, h, size) = pi5_check_params(n)?;
    let tests = binomial(n, h);
    if (1u128 << n) * u128::from(tests) > 1 << 28 {
        return Err(Error::Size(format!("2^{n} agreement patterns times {tests} test sets")));
    }
    let mut aborts: u64 = 0;
    let mut t = full(h);
    for _ in 0..tests {
        let rest = full(n) & !t;
        aborts += (0..1u64 << n).filter(|agree| popcount(agree & rest) < size).count() as u64;
        t = next_subset(t);
    }
    Ok(BigRational::new(aborts.into(), (tests << n).into()))
}

/// Next mask with the same popcount, in increasing order.
fn next_subset(v: u64) -> u64 {
    let t = v | (v - 1);
    (t + 1) | (((!t & (!t).wrapping_neg()) - 1) >> (v.trailing_zeros() + 1))
}

/// `P[Binom(k, 1/2) < k/3]`.
pub fn pi5_honest_abort_oracle(n: u32) -> Result<BigRational> {
    let (k, _, size) = pi5_check_params(n)?;
    binomial_tail(u64::from(k), &half(), Tail::Lt(u64::from(size)))
}

/// Probability that a receiver who skips `skip` measurements passes the
/// test: `z` skipped states land in the test set (hypergeometric) and each
/// survives with probability 3/4.
pub fn pi5_skip_pass_rate(n: u32, skip: u32) -> Result<BigRational> {
    let (_, h, _) = pi5_check_params(n)?;
    let mut total = BigRational::zero();
    for z in 0..=skip.min(h) {
        total += hypergeometric_pmf(n.into(), skip.into(), h.into(), z.into()) * survive(z);
    }
    Ok(total)
}

fn survive(z: u32) -> BigRational {
    let mut p = BigRational::one();
    for _ in 0..z {
        p *= ratio(3, 4);
    }
    p
}

/// Probability that the skipping receiver passes the test and knows at
/// least `2k/3` untested positions, so that both subsets are fully known.
pub fn pi5_cheat_success(n: u32, skip: u32) -> Result<BigRational> {
    let (k, h, size) = pi5_check_params(n)?;
    if skip > n {
        return Err(Error::Input(format!("cannot skip {skip} of {n} states")));
    }
    let mut total = BigRational::zero();
    for z in 0..=skip.min(h) {
        let p = hypergeometric_pmf(n.into(), skip.into(), h.into(), z.into());
        if p.is_zero() {
            continue;
        }
        let free = skip - z;
        let need = (2 * size).saturating_sub(free);
        let rest = k - free;
        let enough = if need == 0 { BigRational::one() } else { binomial_tail(rest.into(), &half(), Tail::Ge(need.into()))? };
        total += p * survive(z) * enough;
    }
    Ok(total)
}

fn cheat_bound(n: u32) -> Result<(BigRational, u32)> {
    let mut best = (BigRational::zero(), 0);
    for skip in 0..=n {
        let v = pi5_cheat_success(n, skip)?;
        if v > best.0 {
            best = (v, skip);
        }
    }
    Ok(best)
}

pub fn pi5_cases(n: u32) -> Result<Vec<ConstructionCase>> {
    pi5_cases_with(n, SubsetPolicy::Random)
}

pub fn pi5_cases_with(n: u32, policy: SubsetPolicy) -> Result<Vec<ConstructionCase>> {
    let (k, _, size) = pi5_check_params(n)?;
    let [ot_h, ot_a, ot_b] = make_ot(1)?.systems();

    let real = attach(alice(n)?, attach(bob(n, policy)?, resource(n)?, Side::Bob)?, Side::Alice)?;
    let claim = Claim::Bounded {
        exact: pi5_honest_abort_oracle(n)?,
        envelope: chernoff_upper(f64::from(k) / 2.0, 1.0 / 3.0, TailSide::Lower)?,
        note: format!("P[Binom({k}, 1/2) < {size}]"),
    };
    let honest = ConstructionCase::new("pi5", Condition::Honest, real, ot_h, claim)?.with_clause(Clause::new(
        "states, commitments, test set, openings, bases, subsets, masked values, output",
        &[
            &["P5_A.q"],
            &["BC.recv->"],
            &["P5_A.T->"],
            &["BC.val->"],
            &["P5_A.theta->"],
            &["P5_B.I0->", "P5_B.I1->"],
            &["P5_A.t0->", "P5_A.t1->"],
            &["P5_B.out->"],
        ],
    ));
    let honest = {
        let d = honest.script(&super::pi1::fixed(&honest, &[("a0", 1), ("a1", 0), ("b", 0)]), |s| s.value(Side::Bob, "out") != Some(1))?;
        honest.with_reference(Reference::new("abort-detecting", d))
    };

    let real = attach(bob(n, policy)?, resource(n)?, Side::Bob)?;
    let ideal = attach(sim_alice(n, policy)?, ot_a, Side::Alice)?;
    let da = ConstructionCase::new("pi5", Condition::DishonestAlice, real, ideal, Claim::Perfect)?
        .with_clause(Clause::new("bases before subsets before output", &[&["->chA.theta>"], &["P5_B.I0->", "P5_B.I1->"], &["P5_B.out->"]]));
    let sender = driving(alice(n)?, Side::Alice, &da.real, &[("a0", 1), ("a1", 0), ("b", 1)], |s| s.value(Side::Bob, "out") == Some(0))?;
    let da = da.with_reference(Reference::new("honest-sender", sender));

    let real = attach(alice(n)?, resource(n)?, Side::Alice)?;
    let ideal = attach(sim_bob(n)?, ot_b, Side::Bob)?;
    let (bound, worst) = cheat_bound(n)?;
    let claim = Claim::Bounded {
        envelope: num_traits::ToPrimitive::to_f64(&bound).unwrap_or(1.0),
        exact: bound,
        note: format!("best skip-and-measure receiver (skips {worst} of {n}) passes and knows both subsets"),
    };
    let db = ConstructionCase::new("pi5", Condition::DishonestBob, real, ideal, claim)?.with_clause(Clause::new(
        "commitments before test set before bases before masked values",
        &[&["->BC.x"], &["P5_A.T->"], &["P5_A.theta->"], &["P5_A.t0->", "P5_A.t1->"]],
    ));
    let mut refs = Vec::new();
    for (name, skip, goal) in [
        ("measure-all-decode", 0, Pi5Goal::DecodeBoth),
        ("skip-all-decode", n, Pi5Goal::DecodeBoth),
        ("skip-all-pass", n, Pi5Goal::PassTest),
    ] {
        refs.push(Reference::new(name, cheater(&db.real, n, skip, goal)?));
    }
    if worst != 0 && worst != n {
        refs.push(Reference::new(&format!("skip-{worst}-decode"), cheater(&db.real, n, worst, Pi5Goal::DecodeBoth)?));
    }
    Ok(vec![honest, da, refs.into_iter().fold(db, ConstructionCase::with_reference)])
}
