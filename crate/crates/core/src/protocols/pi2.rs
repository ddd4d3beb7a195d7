//! Randomized OT from OT: Alice feeds two fresh uniform bits and keeps them.

use super::pi1::fixed;
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, Block, Cx, Kind, Logic, Payload, Side, Site};
use crate::error::Result;
use crate::primitives::{make_ot, make_rot};

#[derive(Clone)]
struct Draw;

// s0 s1 | a0 a1
impl Logic for Draw {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for i in 0..2 {
            let v = Payload::bit(cx.bit());
            cx.send(2 + i, v);
            cx.send(i, v);
        }
        Ok(())
    }

    fn receive(&mut self, _port: usize, _msg: Payload, _cx: &mut Cx<'_>) -> Result<()> {
        Ok(())
    }

    crate::clone_logic!();
}

fn alice() -> Result<Block> {
    Block::build("P2_A", Site::Alice)
        .output("s0", Side::Outer, Kind::BIT)
        .output("s1", Side::Outer, Kind::BIT)
        .output("a0", Side::Alice, Kind::BIT)
        .output("a1", Side::Alice, Kind::BIT)
        .finish(Draw)
}

/// Forwards each listed `(input, output)` port pair unchanged.
#[derive(Clone)]
struct Forward {
    map: Vec<(usize, usize)>,
}

impl Logic for Forward {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        for &(from, to) in &self.map {
            if from == port {
                cx.send(to, msg);
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

/// Identity converter on Bob's `b`/`out` interface.
fn identity_bob(name: &str) -> Result<Block> {
    Block::build(name, Site::Bob)
        .input("b#o", Side::Outer, Kind::BIT)
        .output("out#o", Side::Outer, Kind::BIT)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT)
        .computed_from(&["b#o"], "b")
        .computed_from(&["out"], "out#o")
        .finish(Forward { map: vec![(0, 2), (3, 1)] })
}

/// Forwards Alice's chosen inputs to the ROT as its strings.
fn sim_alice() -> Result<Block> {
    Block::build("S2_A", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .input("a1", Side::Outer, Kind::BIT)
        .output("s0", Side::Alice, Kind::BIT)
        .output("s1", Side::Alice, Kind::BIT)
        .computed_from(&["a0"], "s0")
        .computed_from(&["a1"], "s1")
        .finish(Forward { map: vec![(0, 2), (1, 3)] })
}

pub fn pi2_cases() -> Result<Vec<ConstructionCase>> {
    let [ot_h, ot_a, ot_b] = make_ot(1)?.systems();
    let [rot_h, rot_a, rot_b] = make_rot(1)?.systems();

    let real = attach(alice()?, attach(identity_bob("P2_B")?, ot_h, Side::Bob)?, Side::Alice)?;
    let honest = ConstructionCase::new("pi2", Condition::Honest, real, rot_h, Claim::Perfect)?
        .with_clause(Clause::new("choice before output", &[&["->P2_B.b#o"], &["OT.out->"], &["P2_B.out#o->"]]));
    let honest = {
        let d = honest.script(&fixed(&honest, &[("b", 1)]), |s| s.value(Side::Bob, "out") != s.value(Side::Alice, "s1"))?;
        honest.with_reference(Reference::new("output-mismatch", d))
    };

    let real = attach(identity_bob("P2_B")?, ot_a, Side::Bob)?;
    let ideal = attach(sim_alice()?, rot_a, Side::Alice)?;
    let da = ConstructionCase::new("pi2", Condition::DishonestAlice, real, ideal, Claim::Perfect)?;
    let da = {
        let d = da.script(&fixed(&da, &[("a0", 1), ("a1", 0), ("b", 0)]), |s| s.value(Side::Bob, "out") == Some(1))?;
        da.with_reference(Reference::new("chosen-string", d))
    };

    let real = attach(alice()?, ot_b, Side::Alice)?;
    let ideal = attach(identity_bob("S2_B")?, rot_b, Side::Bob)?;
    let db = ConstructionCase::new("pi2", Condition::DishonestBob, real, ideal, Claim::Perfect)?;
    let db = {
        let d = db.script(&fixed(&db, &[("b", 0)]), |s| s.value(Side::Alice, "s0") == s.value(Side::Alice, "s1"))?;
        db.with_reference(Reference::new("equal-strings", d))
    };
    Ok(vec![honest, da, db])
}
