use serde::Serialize;

use crate::engine::{attach, Block, Cx, Dir, Kind, Logic, Payload, PortSig, Script, Seen, Side, Site, System};
use crate::error::{Error, Result};

/// How Bob picks his two index subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetPolicy {
    /// Lowest indices first.
    Lex,
    /// Uniformly random subsets.
    #[default]
    Random,
}

pub(crate) fn popcount(m: u64) -> u32 {
    m.count_ones()
}

/// Positions set in `m`, ascending.
pub(crate) fn positions(m: u64) -> impl Iterator<Item = u32> {
    (0..64).filter(move |i| m >> i & 1 == 1)
}

/// Mask of the first `n` positions.
pub(crate) fn full(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// XOR of `bits[i]` over `i` in `mask`.
pub(crate) fn parity(bits: &[u64], mask: u64) -> u64 {
    positions(mask).fold(0, |a, i| a ^ bits.get(i as usize).copied().unwrap_or(0)) & 1
}

/// A `size`-subset of `pool` chosen by `policy`.
pub(crate) fn pick(pool: u64, size: u32, policy: SubsetPolicy, cx: &mut Cx<'_>) -> u64 {
    let avail: Vec<u32> = positions(pool).collect();
    debug_assert!(avail.len() as u32 >= size);
    match policy {
        SubsetPolicy::Lex => avail.iter().take(size as usize).fold(0, |m, &i| m | 1 << i),
        SubsetPolicy::Random => {
            let r = cx.subset(avail.len() as u32, size);
            positions(r).fold(0, |m, j| m | 1 << avail[j as usize])
        }
    }
}

/// Bob's pair of subsets: `I_b` inside `known`, `I_{1-b}` from the rest of
/// `universe`. Returned as `(I_0, I_1)`.
pub(crate) fn choose_pair(
    known: u64,
    universe: u64,
    size: u32,
    b: u64,
    policy: SubsetPolicy,
    cx: &mut Cx<'_>,
) -> (u64, u64) {
    let mine = pick(known, size, policy, cx);
    let other = pick(universe & !mine, size, policy, cx);
    if b & 1 == 0 {
        (mine, other)
    } else {
        (other, mine)
    }
}

/// Alice's check on a received pair of subsets.
pub(crate) fn valid_pair(i0: Payload, i1: Payload, universe: u64, size: u32) -> Option<(u64, u64)> {
    let (a, b) = (i0.set()?, i1.set()?);
    let ok = a & b == 0 && popcount(a) == size && popcount(b) == size && (a | b) & !universe == 0;
    ok.then_some((a, b))
}

/// Bit payload, or ⊥ when any ingredient was ⊥.
pub(crate) fn bit_or_bot(v: Option<u64>) -> Payload {
    v.map(Payload::bit).unwrap_or(Payload::Bot)
}

/// Side-by-side composition that always prefixes `i/`, even for one member.
pub(crate) fn indexed(systems: Vec<System>) -> Result<System> {
    if systems.is_empty() {
        return Err(Error::Input("need at least one instance".into()));
    }
    let mut it = systems.into_iter().enumerate();
    let (_, first) = it.next().expect("non-empty");
    let mut acc = first.prefixed("0/");
    for (i, s) in it {
        acc = acc.join(s.prefixed(&format!("{i}/")), &[])?;
    }
    Ok(acc)
}

/// Stores one payload per port and says when a group is complete.
#[derive(Debug, Clone)]
pub(crate) struct Inbox {
    got: Vec<Option<(Payload, f64)>>,
}

impl Inbox {
    pub fn new(ports: usize) -> Inbox {
        Inbox { got: vec![None; ports] }
    }

    /// Records `msg`; a second message on the same port is an order error.
    pub fn put(&mut self, port: usize, msg: Payload, cx: &Cx<'_>, name: &str) -> Result<()> {
        if self.got[port].is_some() {
            return Err(cx.order_error(format!("second message on {name}")));
        }
        self.got[port] = Some((msg, cx.t()));
        Ok(())
    }

    pub fn get(&self, port: usize) -> Option<Payload> {
        self.got[port].map(|(p, _)| p)
    }

    pub fn has(&self, port: usize) -> bool {
        self.got[port].is_some()
    }

    pub fn all(&self, ports: impl IntoIterator<Item = usize>) -> bool {
        ports.into_iter().all(|p| self.got[p].is_some())
    }

    pub fn value(&self, port: usize) -> Option<u64> {
        self.get(port).and_then(Payload::value)
    }
}

/// Port layout of a distinguisher box covering every free port of a system.
/// Port `i` mirrors the `i`-th entry of [`System::ports`].
#[derive(Debug, Clone)]
pub(crate) struct Mirror {
    ports: Vec<PortSig>,
}

impl Mirror {
    pub fn of(sys: &System) -> Mirror {
        Mirror { ports: sys.ports() }
    }

    /// Index of the mirrored port; panics on a name the system lacks, which
    /// is a bug in the distinguisher's construction.
    pub fn idx(&self, side: Side, name: &str) -> usize {
        self.ports
            .iter()
            .position(|p| p.side == side && p.name == name)
            .unwrap_or_else(|| panic!("no free port {side}:{name}"))
    }

    pub fn build(&self, name: &str, logic: impl Logic + 'static) -> Result<System> {
        let mut b = Block::build(name, Site::Alice);
        for p in &self.ports {
            b = b.port(format!("{}:{}#d", p.side, p.name), p.side, p.dir.flip(), p.kind);
        }
        let mut sys = System::of(b.finish(logic)?);
        for p in &self.ports {
            sys = sys.rename((p.side, &format!("{}:{}", p.side, p.name)), (p.side, &p.name))?;
        }
        Ok(sys)
    }
}

/// Distinguisher made of an honest party box on `side` plus a script on
/// every other port. The script feeds the named bit values (0 when unlisted)
/// at t = 0 and decides with `decide`.
pub(crate) fn driving(
    party: Block,
    side: Side,
    real: &System,
    values: &[(&str, u64)],
    decide: impl Fn(&Seen) -> bool + Send + Sync + 'static,
) -> Result<System> {
    let party = System::of(party);
    let full = attach(party.clone(), real.clone(), side)?;
    let mut script = Script::against(&full);
    for p in full.ports().into_iter().filter(|p| p.dir == Dir::In) {
        let Kind::Bits(w) = p.kind else {
            return Err(Error::Usage(format!("cannot script {}:{}", p.side, p.name)));
        };
        let v = values.iter().find(|(n, _)| *n == p.name).map_or(0, |(_, v)| *v);
        script = script.feed(p.side, &p.name, Payload::bits(v, w), 0.0)?;
    }
    let script = script.decide(decide).build()?;
    let outer: Vec<String> = party.ports().into_iter().filter(|p| p.side == Side::Outer).map(|p| p.name).collect();
    let bindings: Vec<_> = outer.iter().map(|n| ((side, n.as_str()), (Side::Outer, n.as_str()))).collect();
    script.join(party, &bindings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_and_positions() {
        assert_eq!(positions(0b1011).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(parity(&[1, 1, 0, 1], 0b1011), 1);
        assert_eq!(parity(&[1, 1, 0, 1], 0b0011), 0);
        assert_eq!(full(3), 0b111);
    }

    #[test]
    fn pair_check() {
        let u = full(6);
        assert_eq!(valid_pair(Payload::Set(0b11), Payload::Set(0b1100), u, 2), Some((0b11, 0b1100)));
        assert_eq!(valid_pair(Payload::Set(0b11), Payload::Set(0b110), u, 2), None);
        assert_eq!(valid_pair(Payload::Set(0b1), Payload::Set(0b110), u, 2), None);
        assert_eq!(valid_pair(Payload::Bot, Payload::Set(0b110), u, 2), None);
        assert_eq!(valid_pair(Payload::Set(0b11), Payload::Set(0b1100_0000), u, 2), None);
    }
}
