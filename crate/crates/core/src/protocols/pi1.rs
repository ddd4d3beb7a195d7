//! OT from one randomized OT and a one-time pad.
//!
//! Alice pads her inputs with the ROT strings, `c_i = a_i ^ s_i`, and sends
//! both ciphertexts; Bob unpads the one he can, `c_b ^ s_b`.

use super::common::{bit_or_bot, Inbox};
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, channel, Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::Result;
use crate::primitives::{make_ot, make_rot};

#[derive(Clone)]
struct Pad {
    inbox: Inbox,
}

// a0 a1 s0 s1 | c0 c1
impl Logic for Pad {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["a0", "a1", "s0", "s1"][port])?;
        if self.inbox.all(0..4) {
            for i in 0..2 {
                let c = self.inbox.value(i).zip(self.inbox.value(2 + i)).map(|(a, s)| a ^ s);
                cx.send(4 + i, bit_or_bot(c));
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn alice() -> Result<Block> {
    Block::build("P1_A", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .input("a1", Side::Outer, Kind::BIT)
        .input("s0", Side::Alice, Kind::BIT)
        .input("s1", Side::Alice, Kind::BIT)
        .output("c0", Side::Alice, Kind::BIT)
        .output("c1", Side::Alice, Kind::BIT)
        .computed_from(&["a0", "s0"], "c0")
        .computed_from(&["a1", "s1"], "c1")
        .finish(Pad { inbox: Inbox::new(4) })
}

#[derive(Clone)]
struct Unpad {
    inbox: Inbox,
}

// b#o out#o b out c0 c1
impl Logic for Unpad {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["b", "", "", "out", "c0", "c1"][port])?;
        if port == 0 {
            cx.send(2, msg);
        }
        if self.inbox.all([0, 3, 4, 5]) {
            let out = self.inbox.value(0).and_then(|b| {
                let c = self.inbox.value(4 + b as usize)?;
                Some(c ^ self.inbox.value(3)?)
            });
            cx.send(1, bit_or_bot(out));
        }
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        if self.inbox.has(3) && !self.inbox.all([4, 5]) {
            return Err(cx.order_error("ciphertexts missing when the output was due"));
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn bob() -> Result<Block> {
    Block::build("P1_B", Site::Bob)
        .input("b#o", Side::Outer, Kind::BIT)
        .output("out#o", Side::Outer, Kind::BIT)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT)
        .input("c0", Side::Bob, Kind::BIT)
        .input("c1", Side::Bob, Kind::BIT)
        .computed_from(&["b#o"], "b")
        .computed_from(&["out", "c0", "c1"], "out#o")
        .finish(Unpad { inbox: Inbox::new(6) })
}

#[derive(Clone)]
struct SimAlice {
    inbox: Inbox,
}

// s0 s1 c0 c1 | a0 a1
impl Logic for SimAlice {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["s0", "s1", "c0", "c1"][port])?;
        if self.inbox.all(0..4) {
            for i in 0..2 {
                let a = self.inbox.value(i).zip(self.inbox.value(2 + i)).map(|(s, c)| s ^ c);
                cx.send(4 + i, bit_or_bot(a));
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_alice() -> Result<Block> {
    Block::build("S1_A", Site::Alice)
        .input("s0", Side::Outer, Kind::BIT)
        .input("s1", Side::Outer, Kind::BIT)
        .input("c0", Side::Outer, Kind::BIT)
        .input("c1", Side::Outer, Kind::BIT)
        .output("a0", Side::Alice, Kind::BIT)
        .output("a1", Side::Alice, Kind::BIT)
        .computed_from(&["s0", "c0"], "a0")
        .computed_from(&["s1", "c1"], "a1")
        .finish(SimAlice { inbox: Inbox::new(4) })
}

#[derive(Clone)]
struct SimBob {
    b: Option<Payload>,
}

// b#o out#o c0 c1 b out
impl Logic for SimBob {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if port == 0 {
            if self.b.is_some() {
                return Err(cx.order_error("second choice bit"));
            }
            self.b = Some(msg);
            cx.send(4, msg);
            return Ok(());
        }
        // the ideal OT's answer a_b
        let Some(b) = self.b.and_then(Payload::value) else {
            cx.send(1, Payload::Bot);
            let r = cx.bit();
            cx.send(2, Payload::bit(r));
            let r = cx.bit();
            cx.send(3, Payload::bit(r));
            return Ok(());
        };
        let s = cx.bit();
        cx.send(1, Payload::bit(s));
        let cb = msg.value().map(|a| a ^ s);
        let other = Payload::bit(cx.bit());
        let (c0, c1) = if b == 0 { (bit_or_bot(cb), other) } else { (other, bit_or_bot(cb)) };
        cx.send(2, c0);
        cx.send(3, c1);
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_bob() -> Result<Block> {
    Block::build("S1_B", Site::Bob)
        .input("b#o", Side::Outer, Kind::BIT)
        .output("out#o", Side::Outer, Kind::BIT)
        .output("c0", Side::Outer, Kind::BIT)
        .output("c1", Side::Outer, Kind::BIT)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT)
        .computed_from(&["b#o"], "b")
        .computed_from(&["out"], "out#o")
        .computed_from(&["out"], "c0")
        .computed_from(&["out"], "c1")
        .finish(SimBob { b: None })
}

fn ciphertexts() -> Result<System> {
    channel("ch", Side::Alice, &[("c0", Kind::BIT), ("c1", Kind::BIT)])
}

/// Honest, dishonest-Alice and dishonest-Bob cases.
pub fn pi1_cases() -> Result<Vec<ConstructionCase>> {
    let rot = make_rot(1)?;
    let ot = make_ot(1)?;
    let [rot_h, rot_a, rot_b] = rot.systems();
    let [ot_h, ot_a, ot_b] = ot.systems();

    let real = attach(alice()?, attach(bob()?, rot_h.join(ciphertexts()?, &[])?, Side::Bob)?, Side::Alice)?;
    let honest = ConstructionCase::new("pi1", Condition::Honest, real, ot_h, Claim::Perfect)?.with_clause(Clause::new(
        "inputs and pads before ciphertexts before output",
        &[&["->P1_A.a0", "->P1_A.a1", "ROT.s0->", "ROT.s1->"], &["P1_A.c0->", "P1_A.c1->"], &["P1_B.out#o->"]],
    ));
    let honest = {
        let d = honest.script(&fixed(&honest, &[("a0", 1), ("a1", 0), ("b", 0)]), |s| s.value(Side::Bob, "out") != Some(1))?;
        honest.with_reference(Reference::new("wrong-output", d))
    };

    let real = attach(bob()?, rot_a.join(ciphertexts()?, &[])?, Side::Bob)?;
    let ideal = attach(sim_alice()?, ot_a, Side::Alice)?;
    let da = ConstructionCase::new("pi1", Condition::DishonestAlice, real, ideal, Claim::Perfect)?
        .with_clause(Clause::new("ciphertexts before output", &[&["->ch.c0>", "->ch.c1>"], &["P1_B.out#o->"]]));
    let da = {
        let d = da.script(&fixed(&da, &[("s0", 1), ("s1", 0), ("c0", 1), ("c1", 1), ("b", 1)]), |s| {
            s.value(Side::Bob, "out") == Some(1)
        })?;
        da.with_reference(Reference::new("unpad-s1-c1", d))
    };

    let real = attach(alice()?, rot_b.join(ciphertexts()?, &[])?, Side::Alice)?;
    let ideal = attach(sim_bob()?, ot_b, Side::Bob)?;
    let db = ConstructionCase::new("pi1", Condition::DishonestBob, real, ideal, Claim::Perfect)?.with_clause(
        Clause::new("pads before ciphertexts", &[&["->P1_A.a0", "->P1_A.a1", "ROT.s0->", "ROT.s1->"], &["P1_A.c0->", "P1_A.c1->"]]),
    );
    let db = {
        let d = db.script(&fixed(&db, &[("a0", 0), ("a1", 1), ("b", 0)]), |s| {
            let c1 = s.value(Side::Bob, "c1");
            let c0 = s.value(Side::Bob, "c0");
            let out = s.value(Side::Bob, "out");
            // decrypting the unchosen ciphertext with the chosen pad
            c1.zip(out) == Some((1, 0)) || c0.zip(out).map(|(c, o)| c ^ o) == Some(1)
        })?;
        db.with_reference(Reference::new("cross-decrypt", d))
    };
    Ok(vec![honest, da, db])
}

/// Input vector with the given bit values for the named ports (either side).
pub(crate) fn fixed(case: &ConstructionCase, values: &[(&str, u64)]) -> Vec<(crate::engine::PortSig, Payload)> {
    case.real
        .ports()
        .into_iter()
        .filter(|p| p.dir == crate::engine::Dir::In)
        .map(|p| {
            let v = values.iter().find(|(n, _)| *n == p.name).map(|(_, v)| *v).unwrap_or(0);
            let x = match p.kind {
                Kind::Bits(w) => Payload::bits(v, w),
                Kind::Symbol => Payload::Open,
                _ => Payload::Bot,
            };
            (p, x)
        })
        .collect()
}
