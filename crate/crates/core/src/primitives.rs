//! Ideal resources: OT, randomized OT, Rabin OT, bit commitment and two-party
//! computation, each as an honest / dishonest-Alice / dishonest-Bob triple.
//!
//! Outputs leave one time unit after the latest input they depend on, at the
//! receiving party's site. A ⊥ on a required input turns the output into ⊥.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::engine::{Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::{Error, Result};

/// `(R, R_A, R_B)`.
#[derive(Debug, Clone)]
pub struct PrimitiveTriple {
    pub honest: Block,
    pub dishonest_alice: Block,
    pub dishonest_bob: Block,
}

impl PrimitiveTriple {
    fn same(b: Block) -> Self {
        PrimitiveTriple { honest: b.clone(), dishonest_alice: b.clone(), dishonest_bob: b }
    }

    pub fn systems(&self) -> [System; 3] {
        [self.honest.clone().into(), self.dishonest_alice.clone().into(), self.dishonest_bob.clone().into()]
    }
}

fn check_width(s: u8) -> Result<()> {
    if s == 0 || s > 32 {
        return Err(Error::Input(format!("string length must be in 1..=32, got {s}")));
    }
    Ok(())
}

fn duplicate(cx: &Cx<'_>, port: &str) -> Error {
    cx.order_error(format!("second input on {port}"))
}

/// Waits for three inputs `x0, x1, c` and outputs `x_c` on port 3.
#[derive(Clone, Default)]
struct Select {
    got: [Option<(Payload, f64)>; 3],
}

impl Logic for Select {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.got[port].is_some() {
            return Err(duplicate(cx, ["a0", "a1", "b"][port]));
        }
        self.got[port] = Some((msg, cx.t()));
        if let [Some((a0, t0)), Some((a1, t1)), Some((b, tb))] = self.got {
            let out = match b.value() {
                Some(0) => a0,
                Some(_) => a1,
                None => Payload::Bot,
            };
            cx.send_at(3, out, t0.max(t1).max(tb) + 1.0);
        }
        Ok(())
    }

    crate::clone_logic!();
}

/// 1-out-of-2 OT on `s`-bit strings. Ports: Alice `a0`, `a1`; Bob `b`, `out`.
pub fn make_ot(s: u8) -> Result<PrimitiveTriple> {
    check_width(s)?;
    let b = Block::build("OT", Site::Bob)
        .input("a0", Side::Alice, Kind::Bits(s))
        .input("a1", Side::Alice, Kind::Bits(s))
        .input("b", Side::Bob, Kind::BIT)
        .output("out", Side::Bob, Kind::Bits(s))
        .after(&["a0", "a1", "b"], "out")
        .finish(Select::default())?;
    Ok(PrimitiveTriple::same(b))
}

#[derive(Clone)]
struct RotHonest {
    width: u8,
    s: [Payload; 2],
    b_seen: bool,
}

impl Logic for RotHonest {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for i in 0..2 {
            self.s[i] = Payload::bits(cx.bits(self.width), self.width);
            cx.send(i, self.s[i]);
        }
        Ok(())
    }

    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.b_seen {
            return Err(duplicate(cx, "b"));
        }
        self.b_seen = true;
        let out = match msg.value() {
            Some(b) => self.s[b as usize & 1],
            None => Payload::Bot,
        };
        cx.send_at(3, out, cx.t() + 1.0);
        Ok(())
    }

    crate::clone_logic!();
}

/// Randomized OT. Ports: Alice `s0`, `s1` (outputs, or inputs when Alice is
/// dishonest); Bob `b`, `out`.
pub fn make_rot(s: u8) -> Result<PrimitiveTriple> {
    check_width(s)?;
    let honest = Block::build("ROT", Site::Bob)
        .output("s0", Side::Alice, Kind::Bits(s))
        .output("s1", Side::Alice, Kind::Bits(s))
        .input("b", Side::Bob, Kind::BIT)
        .output("out", Side::Bob, Kind::Bits(s))
        .after(&["b"], "out")
        .finish(RotHonest { width: s, s: [Payload::Bot; 2], b_seen: false })?;
    let dishonest_alice = Block::build("ROT", Site::Bob)
        .input("s0", Side::Alice, Kind::Bits(s))
        .input("s1", Side::Alice, Kind::Bits(s))
        .input("b", Side::Bob, Kind::BIT)
        .output("out", Side::Bob, Kind::Bits(s))
        .after(&["s0", "s1", "b"], "out")
        .finish(Select::default())?;
    Ok(PrimitiveTriple { dishonest_bob: honest.clone(), honest, dishonest_alice })
}

/// Parses a probability written as a fraction (`1/4`) or a decimal (`0.25`).
pub fn parse_probability(text: &str) -> Result<Ratio<u64>> {
    let text = text.trim();
    let bad = || Error::Input(format!("not a probability in [0,1]: {text:?}"));
    let r = if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ratio::new(n, d)
    } else {
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.len() > 12 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10u64.pow(frac.len() as u32);
        let f: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ratio::new(int.checked_mul(den).ok_or_else(bad)? + f, den)
    };
    if r > Ratio::from_integer(1) {
        return Err(bad());
    }
    Ok(r)
}

#[derive(Clone)]
struct RabinLogic {
    p: Ratio<u64>,
    seen: bool,
}

impl Logic for RabinLogic {
    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.seen {
            return Err(duplicate(cx, "x"));
        }
        self.seen = true;
        let out = if !msg.is_bot() && cx.bernoulli(self.p) { msg } else { Payload::Bot };
        cx.send_at(1, out, cx.t() + 1.0);
        Ok(())
    }

    crate::clone_logic!();
}

/// Delivers `x` with probability `p`, ⊥ otherwise. Ports: Alice `x`; Bob `out`.
pub fn make_rabin(p: Ratio<u64>, s: u8) -> Result<PrimitiveTriple> {
    check_width(s)?;
    if *p.denom() == 0 || p > Ratio::from_integer(1) {
        return Err(Error::Input(format!("transfer probability {p} outside [0,1]")));
    }
    let b = Block::build("Rabin", Site::Bob)
        .input("x", Side::Alice, Kind::Bits(s))
        .output("out", Side::Bob, Kind::Bits(s))
        .after(&["x"], "out")
        .finish(RabinLogic { p, seen: false })?;
    Ok(PrimitiveTriple::same(b))
}

/// Float front end for [`make_rabin`]; `p` must have an exact short decimal form.
pub fn make_rabin_f64(p: f64, s: u8) -> Result<PrimitiveTriple> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Input(format!("transfer probability {p} outside [0,1]")));
    }
    make_rabin(parse_probability(&format!("{p}"))?, s)
}

#[derive(Clone, Default)]
struct Commitment {
    x: Option<(Payload, f64)>,
    opened: bool,
}

impl Logic for Commitment {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        let t = cx.t() + 1.0;
        match port {
            0 => {
                if self.x.is_some() {
                    return Err(duplicate(cx, "x"));
                }
                self.x = Some((msg, cx.t()));
                cx.send_at(2, if msg.is_bot() { Payload::Bot } else { Payload::Recv }, t);
            }
            _ => {
                let Some((x, _)) = self.x else {
                    return Err(cx.order_error("open before commit"));
                };
                if self.opened {
                    return Err(duplicate(cx, "open"));
                }
                self.opened = true;
                cx.send_at(3, if msg.is_bot() { Payload::Bot } else { x }, t);
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

/// Bit commitment from `committer` to the other party. Ports: committer `x`,
/// `open`; receiver `recv`, `val`.
pub fn make_bc_by(committer: Side) -> Result<PrimitiveTriple> {
    let receiver = committer.other();
    let home = Site::of(receiver).ok_or_else(|| Error::Input("committer must be a party".into()))?;
    let b = Block::build("BC", home)
        .input("x", committer, Kind::BIT)
        .input("open", committer, Kind::Symbol)
        .output("recv", receiver, Kind::Symbol)
        .output("val", receiver, Kind::BIT)
        .after(&["x"], "recv")
        .after(&["x", "open"], "val")
        .finish(Commitment::default())?;
    Ok(PrimitiveTriple::same(b))
}

/// Bit commitment with Alice committing.
pub fn make_bc() -> Result<PrimitiveTriple> {
    make_bc_by(Side::Alice)
}

/// A two-party function on bit strings.
#[derive(Clone)]
pub struct TwoPartyFn {
    pub name: String,
    pub x_bits: u8,
    pub y_bits: u8,
    pub out_bits: u8,
    pub f: Arc<dyn Fn(u64, u64) -> u64 + Send + Sync>,
}

impl fmt::Debug for TwoPartyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}+{}->{})", self.name, self.x_bits, self.y_bits, self.out_bits)
    }
}

impl TwoPartyFn {
    pub fn and() -> Self {
        TwoPartyFn { name: "and".into(), x_bits: 1, y_bits: 1, out_bits: 1, f: Arc::new(|x, y| x & y) }
    }

    pub fn or() -> Self {
        TwoPartyFn { name: "or".into(), x_bits: 1, y_bits: 1, out_bits: 1, f: Arc::new(|x, y| x | y) }
    }
}

#[derive(Clone)]
struct Compute {
    f: TwoPartyFn,
    got: [Option<(Payload, f64)>; 2],
}

impl Logic for Compute {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.got[port].is_some() {
            return Err(duplicate(cx, ["x", "y"][port]));
        }
        self.got[port] = Some((msg, cx.t()));
        if let [Some((x, tx)), Some((y, ty))] = self.got {
            let out = match (x.value(), y.value()) {
                (Some(x), Some(y)) => Payload::bits((self.f.f)(x, y), self.f.out_bits),
                _ => Payload::Bot,
            };
            let t = tx.max(ty) + 1.0;
            cx.send_at(2, out, t);
            cx.send_at(3, out, t);
        }
        Ok(())
    }

    crate::clone_logic!();
}

/// Secure evaluation of `f`. Ports: Alice `x`, `fa`; Bob `y`, `fb`.
pub fn make_mpc(f: TwoPartyFn) -> Result<PrimitiveTriple> {
    for w in [f.x_bits, f.y_bits, f.out_bits] {
        check_width(w)?;
    }
    let b = Block::build(format!("MPC-{}", f.name), Site::Alice)
        .input("x", Side::Alice, Kind::Bits(f.x_bits))
        .input("y", Side::Bob, Kind::Bits(f.y_bits))
        .output("fa", Side::Alice, Kind::Bits(f.out_bits))
        .output("fb", Side::Bob, Kind::Bits(f.out_bits))
        .after(&["x", "y"], "fa")
        .after(&["x", "y"], "fb")
        .finish(Compute { f, got: [None; 2] })?;
    Ok(PrimitiveTriple::same(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_parsing() {
        assert_eq!(parse_probability("1/4").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_probability("0.75").unwrap(), Ratio::new(3, 4));
        assert_eq!(parse_probability("1").unwrap(), Ratio::from_integer(1));
        assert!(parse_probability("1.5").is_err());
        assert!(parse_probability("-0.1").is_err());
        assert!(parse_probability("3/0").is_err());
    }

    #[test]
    fn rabin_rejects_bad_probability() {
        assert!(matches!(make_rabin(Ratio::new(5, 4), 1), Err(Error::Input(_))));
        assert!(matches!(make_rabin_f64(-0.5, 1), Err(Error::Input(_))));
        assert!(make_rabin_f64(0.25, 2).is_ok());
    }

    #[test]
    fn widths_are_validated() {
        assert!(make_ot(0).is_err());
        assert!(make_rot(33).is_err());
    }

    #[test]
    fn honest_rot_has_no_alice_inputs() {
        let t = make_rot(1).unwrap();
        let alice_inputs = t
            .honest
            .meta()
            .ports
            .iter()
            .filter(|p| p.side == Side::Alice && p.dir == crate::engine::Dir::In)
            .count();
        assert_eq!(alice_inputs, 0);
    }
}
