//! Impossibility attacks as experiments.
//!
//! If a resource could be constructed against both dishonest parties, the
//! dishonest-Bob ideal resource, a merged simulator and the dishonest-Alice
//! ideal resource chained together would be close to the honest resource.
//! [`build_chain`] wires that chain for a concrete merged simulator and the
//! distinguishers here trigger on events the honest resource never produces,
//! so their trigger probability on the chain lower-bounds the advantage.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::engine::{Block, Cx, Experiment, Kind, Logic, Payload, Side, Site, System};
use crate::error::{Error, Result};
use crate::primitives::{make_mpc, make_rabin, make_rot, parse_probability, PrimitiveTriple, TwoPartyFn};
use crate::stats::{self, AdvantageReport, IntervalKind, Mode};

/// Name of the merged simulator box inside a chain.
pub const MERGED: &str = "merged-sim";

/// When the merged simulator must hand its input to the left resource.
pub const INPUT_DUE: f64 = 0.0;

/// A merged simulator: one box with the dishonest-Bob interface of the left
/// resource and the dishonest-Alice interface of the right one.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub name: String,
    pub block: Block,
}

/// Chains `R_B`, the strategy and `R_A`. The free ports are the honest
/// resource's: Alice's side of `R_B` and Bob's side of `R_A`.
pub fn build_chain(triple: &PrimitiveTriple, strategy: &Strategy) -> Result<System> {
    let mut left = System::of(triple.dishonest_bob.clone()).prefixed("L/");
    for p in left.ports().into_iter().filter(|p| p.side == Side::Bob) {
        let plain = p.name["L/".len()..].to_string();
        left = left.rename((Side::Bob, &p.name), (Side::Bob, &plain))?;
    }
    let mut right = System::of(triple.dishonest_alice.clone()).prefixed("R/");
    for p in right.ports().into_iter().filter(|p| p.side == Side::Alice) {
        let plain = p.name["R/".len()..].to_string();
        right = right.rename((Side::Alice, &p.name), (Side::Alice, &plain))?;
    }
    let sim = System::of(strategy.block.clone());
    let sim_ports = sim.ports();
    if let Some(p) = sim_ports.iter().find(|p| p.side == Side::Outer) {
        return Err(Error::wiring(&p.name, "merged simulator has no outer interface"));
    }
    let bindings: Vec<_> = sim_ports.iter().map(|p| ((p.side, p.name.as_str()), (p.side, p.name.as_str()))).collect();
    let mut chain = left.join(right, &[])?.join(sim, &bindings)?;
    for p in chain.ports() {
        let plain = match (p.side, p.name.split_once('/')) {
            (Side::Alice, Some(("L", rest))) | (Side::Bob, Some(("R", rest))) => rest.to_string(),
            _ => return Err(Error::wiring(format!("{}:{}", p.side, p.name), "left unwired by the merged simulator")),
        };
        chain = chain.rename((p.side, &p.name), (p.side, &plain))?;
    }
    if chain.ports() != System::of(triple.honest.clone()).ports() {
        return Err(Error::wiring(MERGED, "chain interface differs from the honest resource"));
    }
    Ok(chain)
}

fn port_value(p: Option<Payload>) -> Option<u64> {
    p.and_then(Payload::value)
}

#[derive(Clone)]
struct RotProbe {
    b: u64,
    got: [Option<Payload>; 3],
}

impl Logic for RotProbe {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        self.b = cx.bit();
        cx.send(2, Payload::bit(self.b));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, _cx: &mut Cx<'_>) -> Result<()> {
        let slot = if port == 3 { 2 } else { port };
        self.got[slot] = Some(msg);
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let want = port_value(self.got[self.b as usize]);
        let seen = port_value(self.got[2]);
        cx.decide(want.is_none() || seen != want);
        Ok(())
    }

    crate::clone_logic!();
}

/// Picks a uniform `b'`, reads `s_0, s_1` on Alice's side and Bob's output;
/// outputs 1 iff Bob's output differs from `s_{b'}` or is missing.
pub fn d_rot(s: u8) -> Result<System> {
    let b = Block::build("D-rot", Site::Alice)
        .input("s0", Side::Alice, Kind::Bits(s))
        .input("s1", Side::Alice, Kind::Bits(s))
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::Bits(s))
        .finish(RotProbe { b: 0, got: [None; 3] })?;
    Ok(b.into())
}

#[derive(Clone)]
struct RabinProbe {
    width: u8,
    x: u64,
    out: Option<Payload>,
}

impl Logic for RabinProbe {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        self.x = cx.bits(self.width);
        cx.send(0, Payload::bits(self.x, self.width));
        Ok(())
    }

    fn receive(&mut self, _port: usize, msg: Payload, _cx: &mut Cx<'_>) -> Result<()> {
        self.out = Some(msg);
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let x = self.x;
        cx.decide(port_value(self.out).is_some_and(|v| v != x));
        Ok(())
    }

    crate::clone_logic!();
}

/// Feeds a uniform `x`; outputs 1 iff Bob receives a value other than `x`.
pub fn d_rabin(s: u8) -> Result<System> {
    let b = Block::build("D-rabin", Site::Alice)
        .output("x", Side::Alice, Kind::Bits(s))
        .input("out", Side::Bob, Kind::Bits(s))
        .finish(RabinProbe { width: s, x: 0, out: None })?;
    Ok(b.into())
}

#[derive(Clone)]
struct AndProbe {
    x: u64,
    y: u64,
    got: [Option<Payload>; 2],
}

impl Logic for AndProbe {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        self.x = cx.bit();
        self.y = cx.bit();
        cx.send(0, Payload::bit(self.x));
        cx.send(2, Payload::bit(self.y));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, _cx: &mut Cx<'_>) -> Result<()> {
        self.got[port / 2] = Some(msg);
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let want = Some(self.x & self.y);
        let bad = self.got.iter().any(|g| port_value(*g) != want);
        cx.decide(bad);
        Ok(())
    }

    crate::clone_logic!();
}

/// Feeds uniform `x` (Alice) and `y` (Bob); outputs 1 iff either party's
/// output differs from `x·y`.
pub fn d_and() -> Result<System> {
    let b = Block::build("D-and", Site::Alice)
        .output("x", Side::Alice, Kind::BIT)
        .input("fa", Side::Alice, Kind::BIT)
        .output("y", Side::Bob, Kind::BIT)
        .input("fb", Side::Bob, Kind::BIT)
        .finish(AndProbe { x: 0, y: 0, got: [None; 2] })?;
    Ok(b.into())
}

/// What a ROT merged simulator does with the string it gets from `R_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RotRule {
    /// Both of Alice's strings are the received one.
    Forward,
    /// Fixed strings, sent before anything is received.
    Early([u64; 2]),
    /// `s'_i = map[i][received]`; one-bit strings only.
    Table([[u64; 2]; 2]),
    /// Fresh uniform strings at activation.
    Fresh,
}

#[derive(Clone)]
struct RotSim {
    width: u8,
    /// `None` draws the choice uniformly.
    b: Option<u64>,
    rule: RotRule,
}

impl Logic for RotSim {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let b = match self.b {
            Some(b) => b,
            None => cx.bit(),
        };
        cx.send_at(0, Payload::bit(b), INPUT_DUE);
        let early = match self.rule {
            RotRule::Early(c) => Some(c),
            RotRule::Fresh => Some([cx.bits(self.width), cx.bits(self.width)]),
            _ => None,
        };
        if let Some(c) = early {
            for (i, v) in c.into_iter().enumerate() {
                cx.send(2 + i, Payload::bits(v, self.width));
            }
        }
        Ok(())
    }

    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        let got = msg.value();
        let s = match (self.rule, got) {
            (RotRule::Forward, Some(v)) => [v, v],
            (RotRule::Table(m), Some(v)) => [m[0][v as usize & 1], m[1][v as usize & 1]],
            (RotRule::Forward | RotRule::Table(_), None) => [0, 0],
            _ => return Ok(()),
        };
        // Alice's site is one light-second away
        let t = cx.t() + 1.0;
        for (i, v) in s.into_iter().enumerate() {
            cx.send_at(2 + i, Payload::bits(v, self.width), t);
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn rot_strategy(name: &str, width: u8, b: Option<u64>, rule: RotRule) -> Result<Strategy> {
    let block = Block::build(MERGED, Site::Bob)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::Bits(width))
        .output("s0", Side::Alice, Kind::Bits(width))
        .output("s1", Side::Alice, Kind::Bits(width))
        .after(&["out"], "s0")
        .after(&["out"], "s1")
        .finish(RotSim { width, b, rule })?;
    Ok(Strategy { name: name.into(), block })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RabinRule {
    ForwardOrUniform,
    Constant(u64),
    Fresh,
}

#[derive(Clone)]
struct RabinSim {
    width: u8,
    rule: RabinRule,
}

impl Logic for RabinSim {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let v = match self.rule {
            RabinRule::Constant(c) => c,
            RabinRule::Fresh => cx.bits(self.width),
            RabinRule::ForwardOrUniform => return Ok(()),
        };
        cx.send(1, Payload::bits(v, self.width));
        Ok(())
    }

    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.rule != RabinRule::ForwardOrUniform {
            return Ok(());
        }
        let v = match msg.value() {
            Some(v) => v,
            None => cx.bits(self.width),
        };
        cx.send_at(1, Payload::bits(v, self.width), cx.t() + 1.0);
        Ok(())
    }

    crate::clone_logic!();
}

fn rabin_strategy(name: &str, width: u8, rule: RabinRule) -> Result<Strategy> {
    let block = Block::build(MERGED, Site::Bob)
        .input("out", Side::Bob, Kind::Bits(width))
        .output("x", Side::Alice, Kind::Bits(width))
        .after(&["out"], "x")
        .finish(RabinSim { width, rule })?;
    Ok(Strategy { name: name.into(), block })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AndRule {
    /// `y` fixed, `x'` set to the product seen on Bob's side.
    Fixed(u64),
    Uniform,
    /// `y` taken from the product the right resource reports to Alice,
    /// which cannot exist yet when `y` is due.
    ForwardY,
}

#[derive(Clone)]
struct AndSim {
    rule: AndRule,
}

impl Logic for AndSim {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let y = match self.rule {
            AndRule::Fixed(c) => c,
            AndRule::Uniform => cx.bit(),
            AndRule::ForwardY => {
                cx.send(2, Payload::bit(1));
                0
            }
        };
        cx.send_at(0, Payload::bit(y), INPUT_DUE);
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if port == 1 && self.rule != AndRule::ForwardY {
            cx.send_at(2, msg, cx.t() + 1.0);
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn and_strategy(name: &str, rule: AndRule) -> Result<Strategy> {
    let mut b = Block::build(MERGED, Site::Bob)
        .output("y", Side::Bob, Kind::BIT)
        .input("fb", Side::Bob, Kind::BIT)
        .output("x", Side::Alice, Kind::BIT)
        .input("fa", Side::Alice, Kind::BIT)
        .after(&["fb"], "x");
    if rule == AndRule::ForwardY {
        b = b.computed_from(&["fa"], "y");
    }
    Ok(Strategy { name: name.into(), block: b.finish(AndSim { rule })? })
}

/// The AND strategy that tries to forward Bob's real input `y'` as `y`. Any
/// run errors with a causality violation.
pub fn and_forward_y() -> Result<Strategy> {
    and_strategy("forward-y", AndRule::ForwardY)
}

/// Which impossibility statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Rot,
    Ot,
    Rabin,
    And,
}

impl Theorem {
    pub fn parse(s: &str) -> Result<Theorem> {
        match s {
            "rot" => Ok(Theorem::Rot),
            "ot" => Ok(Theorem::Ot),
            "rabin" => Ok(Theorem::Rabin),
            "and" => Ok(Theorem::And),
            other => Err(Error::UnknownLabel(other.into())),
        }
    }
}

fn check_ps(p: Ratio<u64>, s: u8) -> Result<()> {
    if *p.denom() == 0 || p > Ratio::one() {
        return Err(Error::Input(format!("probability {p} outside [0,1]")));
    }
    if s == 0 || s > 32 {
        return Err(Error::Input(format!("string length must be in 1..=32, got {s}")));
    }
    Ok(())
}

fn big(p: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()))
}

fn miss(s: u8) -> BigRational {
    BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << s as usize)
}

/// Probability with which the attack's distinguisher must trigger on some
/// chain: `½(1−2^{-s})` for (R)OT, `(1−2^{-s})p(1−p)` for Rabin OT, `¼` for
/// AND. Parameters a theorem does not use are ignored.
pub fn impossibility_bound(th: Theorem, p: Ratio<u64>, s: u8) -> Result<BigRational> {
    check_ps(p, s)?;
    let half = BigRational::new(1.into(), 2.into());
    Ok(match th {
        Theorem::Rot | Theorem::Ot => half * miss(s),
        Theorem::Rabin => {
            let p = big(p);
            miss(s) * p.clone() * (BigRational::one() - p)
        }
        Theorem::And => BigRational::new(1.into(), 4.into()),
    })
}

/// Limit of [`impossibility_bound`] as the string length grows.
pub fn asymptotic_bound(th: Theorem, p: Ratio<u64>) -> Result<BigRational> {
    check_ps(p, 1)?;
    Ok(match th {
        Theorem::Rot | Theorem::Ot => BigRational::new(1.into(), 2.into()),
        Theorem::Rabin => {
            let p = big(p);
            p.clone() * (BigRational::one() - p)
        }
        Theorem::And => BigRational::new(1.into(), 4.into()),
    })
}

/// The chain is three constructions deep, so an `ε` below a third of the
/// trigger bound is impossible.
pub fn epsilon_threshold(bound: &BigRational) -> BigRational {
    bound / BigRational::from_integer(3.into())
}

/// A registered attack with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attack {
    pub theorem: Theorem,
    pub p: Ratio<u64>,
    pub s: u8,
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theorem {
            Theorem::Rot | Theorem::Ot => write!(f, "attack.rot:s={}", self.s),
            Theorem::Rabin => write!(f, "attack.rabin:p={},s={}", self.p, self.s),
            Theorem::And => f.write_str("attack.and"),
        }
    }
}

/// Registry keys accepted by [`Attack::parse`] (parameters optional).
pub const ATTACKS: [&str; 3] = ["attack.rot", "attack.rabin", "attack.and"];

impl Attack {
    pub fn new(theorem: Theorem, p: Ratio<u64>, s: u8) -> Result<Attack> {
        check_ps(p, s)?;
        if theorem == Theorem::Ot {
            return Err(Error::Usage("the OT attack runs through attack.rot".into()));
        }
        if theorem == Theorem::And && s != 1 {
            return Err(Error::Input("attack.and takes no string length".into()));
        }
        Ok(Attack { theorem, p, s })
    }

    /// Parses `attack.rot`, `attack.rot:s=2`, `attack.rabin:p=0.5,s=1` or
    /// `attack.and`. Missing parameters default to `p = 1/2`, `s = 1`.
    pub fn parse(label: &str) -> Result<Attack> {
        let unknown = || Error::UnknownLabel(label.into());
        let (head, params) = label.split_once(':').unwrap_or((label, ""));
        let kind = head.strip_prefix("attack.").ok_or_else(unknown)?;
        let theorem = match kind {
            "rot" | "rabin" | "and" => Theorem::parse(kind)?,
            _ => return Err(unknown()),
        };
        let (mut p, mut s) = (Ratio::new(1, 2), 1u8);
        for kv in params.split(',').filter(|x| !x.is_empty()) {
            match kv.split_once('=') {
                Some(("p", v)) => p = parse_probability(v)?,
                Some(("s", v)) => s = v.parse().map_err(|_| Error::Input(format!("bad string length {v:?}")))?,
                _ => return Err(Error::Input(format!("bad attack parameter {kv:?}"))),
            }
        }
        Attack::new(theorem, p, s)
    }

    pub fn triple(&self) -> Result<PrimitiveTriple> {
        match self.theorem {
            Theorem::Rot | Theorem::Ot => make_rot(self.s),
            Theorem::Rabin => make_rabin(self.p, self.s),
            Theorem::And => make_mpc(TwoPartyFn::and()),
        }
    }

    pub fn distinguisher(&self) -> Result<System> {
        match self.theorem {
            Theorem::Rot | Theorem::Ot => d_rot(self.s),
            Theorem::Rabin => d_rabin(self.s),
            Theorem::And => d_and(),
        }
    }

    pub fn bound(&self) -> BigRational {
        impossibility_bound(self.theorem, self.p, self.s).expect("checked on construction")
    }

    /// Representative merged simulators.
    pub fn library(&self) -> Result<Vec<Strategy>> {
        let s = self.s;
        match self.theorem {
            Theorem::Rot | Theorem::Ot => Ok(vec![
                rot_strategy("forward-b0", s, Some(0), RotRule::Forward)?,
                rot_strategy("forward-b1", s, Some(1), RotRule::Forward)?,
                rot_strategy("forward-random-b", s, None, RotRule::Forward)?,
                rot_strategy("constant-0", s, Some(0), RotRule::Early([0, 0]))?,
                rot_strategy("fresh-uniform", s, Some(0), RotRule::Fresh)?,
            ]),
            Theorem::Rabin => Ok(vec![
                rabin_strategy("forward-or-uniform", s, RabinRule::ForwardOrUniform)?,
                rabin_strategy("constant", s, RabinRule::Constant(0))?,
                rabin_strategy("fresh-uniform", s, RabinRule::Fresh)?,
            ]),
            Theorem::And => Ok(vec![
                and_strategy("y-fixed-0", AndRule::Fixed(0))?,
                and_strategy("y-fixed-1", AndRule::Fixed(1))?,
                and_strategy("y-uniform", AndRule::Uniform)?,
            ]),
        }
    }
}

/// Every deterministic merged simulator for one-bit ROT: a fixed choice `b`,
/// and either fixed strings sent first or strings computed from the received
/// bit afterwards. 8 + 32 strategies.
pub fn rot_deterministic_sweep() -> Result<Vec<Strategy>> {
    let mut out = Vec::new();
    for b in 0..2u64 {
        for c in 0..4u64 {
            let c = [c & 1, c >> 1];
            out.push(rot_strategy(&format!("b={b} first s'=({},{})", c[0], c[1]), 1, Some(b), RotRule::Early(c))?);
        }
        // each of s'_0, s'_1 is one of the four functions of one bit
        for m in 0..16u64 {
            let f = |i: u64| [m >> (2 * i) & 1, m >> (2 * i + 1) & 1];
            let map = [f(0), f(1)];
            let name = format!("b={b} then s'0={:?} s'1={:?}", map[0], map[1]);
            out.push(rot_strategy(&name, 1, Some(b), RotRule::Table(map))?);
        }
    }
    Ok(out)
}

/// Exact probability that `d` outputs 1 on `sys`.
pub fn trigger_probability(sys: &System, d: &System, limit: u64) -> Result<BigRational> {
    let exp = Experiment::new(sys.clone(), d.clone())?;
    Ok(stats::exact_probability(&exp, limit)?.0)
}

/// One strategy's result.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyOutcome {
    pub label: String,
    pub strategy: String,
    pub report: AdvantageReport,
    /// Trigger probability against the honest ideal resource, exactly.
    pub ideal_trigger: String,
    pub bound: f64,
    pub bound_exact: String,
    /// Lower bound on `ε` implied by this run.
    pub epsilon_at_least: f64,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// How to run an attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSettings {
    pub mode: Mode,
    pub limit: u64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for AttackSettings {
    fn default() -> Self {
        AttackSettings { mode: Mode::Exact, limit: crate::engine::exact::DEFAULT_LIMIT, trials: 100_000, seed: 1 }
    }
}

/// Runs `strategies` against the attack's distinguisher. A strategy meets
/// the bound when its exact trigger probability does, or, when sampled, when
/// the bound is not above the interval; the ideal side must never trigger.
pub fn run_strategies(attack: &Attack, strategies: &[Strategy], s: &AttackSettings) -> Result<Vec<StrategyOutcome>> {
    let triple = attack.triple()?;
    let d = attack.distinguisher()?;
    let ideal = trigger_probability(&System::of(triple.honest.clone()), &d, s.limit)?;
    let bound = attack.bound();
    let bound_f = bound.to_f64().unwrap_or(f64::NAN);
    let mut out = Vec::new();
    for st in strategies {
        let chain = build_chain(&triple, st)?;
        let exp = Experiment::new(chain, d.clone())?;
        let mut fallback = None;
        let report = match s.mode {
            Mode::Exact => match stats::exact_probability(&exp, s.limit) {
                Ok((v, leaves)) => AdvantageReport::exact(&v, leaves),
                Err(Error::Size(why)) => {
                    fallback = Some(why);
                    stats::estimate_probability(&exp, s.trials, s.seed, IntervalKind::Hoeffding)?
                }
                Err(e) => return Err(e),
            },
            Mode::MonteCarlo => stats::estimate_probability(&exp, s.trials, s.seed, IntervalKind::Hoeffding)?,
        };
        let meets = match report.exact.as_ref().and_then(|x| x.parse::<BigRational>().ok()) {
            Some(v) => v >= bound,
            None => report.ci_high >= bound_f,
        };
        out.push(StrategyOutcome {
            label: attack.to_string(),
            strategy: st.name.clone(),
            epsilon_at_least: report.value / 3.0,
            verdict: meets && ideal.is_zero(),
            report,
            ideal_trigger: ideal.to_string(),
            bound: bound_f,
            bound_exact: bound.to_string(),
            fallback,
        });
    }
    Ok(out)
}

/// Runs the attack's strategy library.
pub fn run_attack(attack: &Attack, s: &AttackSettings) -> Result<Vec<StrategyOutcome>> {
    run_strategies(attack, &attack.library()?, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn bounds() {
        let h = Ratio::new(1, 2);
        assert_eq!(impossibility_bound(Theorem::Rot, h, 1).unwrap(), q(1, 4));
        assert_eq!(impossibility_bound(Theorem::Rot, h, 2).unwrap(), q(3, 8));
        assert_eq!(impossibility_bound(Theorem::Rabin, h, 1).unwrap(), q(1, 8));
        assert_eq!(impossibility_bound(Theorem::Rabin, h, 2).unwrap(), q(3, 16));
        assert_eq!(impossibility_bound(Theorem::And, h, 1).unwrap(), q(1, 4));
        assert_eq!(epsilon_threshold(&q(1, 4)), q(1, 12));
        assert_eq!(epsilon_threshold(&asymptotic_bound(Theorem::Rot, h).unwrap()), q(1, 6));
        assert!(impossibility_bound(Theorem::Rabin, Ratio::new(3, 2), 1).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for l in ["attack.rot:s=1", "attack.rot:s=2", "attack.rabin:p=1/4,s=1", "attack.and"] {
            assert_eq!(Attack::parse(l).unwrap().to_string(), l);
        }
        assert_eq!(Attack::parse("attack.rabin:p=0.5,s=1").unwrap().p, Ratio::new(1, 2));
        assert!(matches!(Attack::parse("attack.xor"), Err(Error::UnknownLabel(_))));
        assert!(Attack::parse("attack.rot:q=1").is_err());
        assert!(Attack::parse("attack.and:s=2").is_err());
    }

    #[test]
    fn sweep_size() {
        assert_eq!(rot_deterministic_sweep().unwrap().len(), 40);
    }
}
