//! Rabin OT (p = 1/2) from OT.
//!
//! Alice hides `x` at a random position `b*` of the OT and reveals `b*` only
//! once Bob's OT output lies in her causal past. Bob, with a uniform choice
//! bit, keeps the output iff his choice matched.

use super::common::Inbox;
use super::pi1::fixed;
use super::{Claim, Clause, Condition, ConstructionCase, Reference};
use crate::engine::{attach, channel, Block, Cx, Kind, Logic, Payload, Side, Site, System};
use crate::error::Result;
use crate::primitives::{make_ot, make_rabin};
use num_rational::Ratio;

/// Delay between Alice's OT inputs and the reveal of `b*`. Two units put the
/// reveal in the future of Bob's OT output.
pub const REVEAL_DELAY: f64 = 2.0;

#[derive(Clone)]
struct Hide {
    delay: f64,
    bstar: Option<u64>,
}

// x | a0 a1 bstar
impl Logic for Hide {
    fn receive(&mut self, _port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        if self.bstar.is_some() {
            return Err(cx.order_error("second input on x"));
        }
        let bstar = cx.bit();
        self.bstar = Some(bstar);
        let other = Payload::bit(cx.bit());
        let (a0, a1) = if bstar == 0 { (msg, other) } else { (other, msg) };
        let (a0, a1) = if msg.is_bot() { (Payload::Bot, Payload::Bot) } else { (a0, a1) };
        cx.send(1, a0);
        cx.send(2, a1);
        cx.wake_at(cx.t() + self.delay);
        Ok(())
    }

    fn wake(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        let b = self.bstar.expect("woken after x");
        cx.send(3, Payload::bit(b));
        Ok(())
    }

    crate::clone_logic!();
}

fn alice(delay: f64) -> Result<Block> {
    Block::build("P3_A", Site::Alice)
        .input("x", Side::Outer, Kind::BIT)
        .output("a0", Side::Alice, Kind::BIT)
        .output("a1", Side::Alice, Kind::BIT)
        .output("bstar", Side::Alice, Kind::BIT)
        .computed_from(&["x"], "a0")
        .computed_from(&["x"], "a1")
        .computed_from(&["x"], "bstar")
        .finish(Hide { delay, bstar: None })
}

#[derive(Clone)]
struct Check {
    b: u64,
    inbox: Inbox,
}

// out#o b out bstar
impl Logic for Check {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        self.b = cx.bit();
        cx.send(1, Payload::bit(self.b));
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["", "", "out", "bstar"][port])?;
        if self.inbox.all([2, 3]) {
            let keep = self.inbox.value(3) == Some(self.b);
            cx.send(0, if keep { self.inbox.get(2).expect("present") } else { Payload::Bot });
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn bob() -> Result<Block> {
    Block::build("P3_B", Site::Bob)
        .output("out#o", Side::Outer, Kind::BIT)
        .output("b", Side::Bob, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT)
        .input("bstar", Side::Bob, Kind::BIT)
        .computed_from(&["out", "bstar"], "out#o")
        .finish(Check { b: 0, inbox: Inbox::new(4) })
}

#[derive(Clone)]
struct SimAlice {
    inbox: Inbox,
}

// a0 a1 bstar | x
impl Logic for SimAlice {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["a0", "a1", "bstar"][port])?;
        if self.inbox.all(0..3) {
            let x = match self.inbox.value(2) {
                Some(b) => self.inbox.get(b as usize).expect("present"),
                None => Payload::Bot,
            };
            cx.send(3, x);
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_alice() -> Result<Block> {
    Block::build("S3_A", Site::Alice)
        .input("a0", Side::Outer, Kind::BIT)
        .input("a1", Side::Outer, Kind::BIT)
        .input("bstar", Side::Outer, Kind::BIT)
        .output("x", Side::Alice, Kind::BIT)
        .computed_from(&["a0", "a1", "bstar"], "x")
        .finish(SimAlice { inbox: Inbox::new(3) })
}

#[derive(Clone)]
struct SimBob {
    inbox: Inbox,
}

// b out#o bstar out
impl Logic for SimBob {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.inbox.put(port, msg, cx, ["b", "", "", "out"][port])?;
        if !self.inbox.all([0, 3]) {
            return Ok(());
        }
        let x = self.inbox.get(3).expect("present");
        match self.inbox.value(0) {
            None => {
                cx.send(1, Payload::Bot);
                let r = cx.bit();
                cx.send(2, Payload::bit(r));
            }
            Some(b) if !x.is_bot() => {
                cx.send(1, x);
                cx.send(2, Payload::bit(b));
            }
            Some(b) => {
                let r = cx.bit();
                cx.send(1, Payload::bit(r));
                cx.send(2, Payload::bit(1 - b));
            }
        }
        Ok(())
    }

    crate::clone_logic!();
}

fn sim_bob() -> Result<Block> {
    Block::build("S3_B", Site::Bob)
        .input("b", Side::Outer, Kind::BIT)
        .output("out#o", Side::Outer, Kind::BIT)
        .output("bstar", Side::Outer, Kind::BIT)
        .input("out", Side::Bob, Kind::BIT)
        .computed_from(&["b", "out"], "out#o")
        .computed_from(&["b", "out"], "bstar")
        .finish(SimBob { inbox: Inbox::new(4) })
}

fn reveal() -> Result<System> {
    channel("ch", Side::Alice, &[("bstar", Kind::BIT)])
}

pub fn pi3_cases() -> Result<Vec<ConstructionCase>> {
    pi3_cases_with_reveal_delay(REVEAL_DELAY)
}

/// Cases with Alice revealing `b*` `delay` time units after her OT inputs.
/// Delays below [`REVEAL_DELAY`] break the ordering clause of the honest case.
pub fn pi3_cases_with_reveal_delay(delay: f64) -> Result<Vec<ConstructionCase>> {
    let [ot_h, ot_a, ot_b] = make_ot(1)?.systems();
    let [rb_h, rb_a, rb_b] = make_rabin(Ratio::new(1, 2), 1)?.systems();

    let real = attach(alice(delay)?, attach(bob()?, ot_h.join(reveal()?, &[])?, Side::Bob)?, Side::Alice)?;
    let honest = ConstructionCase::new("pi3", Condition::Honest, real, rb_h, Claim::Perfect)?.with_clause(Clause::new(
        "input before OT inputs before OT output before reveal before output",
        &[&["->P3_A.x"], &["P3_A.a0->", "P3_A.a1->"], &["OT.out->"], &["P3_A.bstar->"], &["P3_B.out#o->"]],
    ));
    let honest = {
        let d = honest.script(&fixed(&honest, &[("x", 1)]), |s| s.value(Side::Bob, "out") == Some(1))?;
        honest.with_reference(Reference::new("delivered", d))
    };

    let real = attach(bob()?, ot_a.join(reveal()?, &[])?, Side::Bob)?;
    let ideal = attach(sim_alice()?, rb_a, Side::Alice)?;
    let da = ConstructionCase::new("pi3", Condition::DishonestAlice, real, ideal, Claim::Perfect)?
        .with_clause(Clause::new("reveal before output", &[&["->ch.bstar>"], &["P3_B.out#o->"]]));
    let da = {
        let d = da.script(&fixed(&da, &[("a0", 1), ("a1", 0), ("bstar", 0)]), |s| s.value(Side::Bob, "out") == Some(1))?;
        da.with_reference(Reference::new("hidden-slot", d))
    };

    let real = attach(alice(delay)?, ot_b.join(reveal()?, &[])?, Side::Alice)?;
    let ideal = attach(sim_bob()?, rb_b, Side::Bob)?;
    let db = ConstructionCase::new("pi3", Condition::DishonestBob, real, ideal, Claim::Perfect)?.with_clause(
        Clause::new("OT inputs before OT output before reveal", &[&["P3_A.a0->", "P3_A.a1->"], &["OT.out->"], &["P3_A.bstar->"]]),
    );
    let db = {
        let d = db.script(&fixed(&db, &[("x", 1), ("b", 0)]), |s| {
            (s.value(Side::Bob, "bstar") == Some(0)) == (s.value(Side::Bob, "out") == Some(1))
        })?;
        db.with_reference(Reference::new("reveal-matches-output", d))
    };
    Ok(vec![honest, da, db])
}
