use serde::Serialize;

use super::{Block, Dir, Kind, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Link {
    pub from: (usize, usize),
    pub to: (usize, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Exposed {
    pub name: String,
    pub side: Side,
    pub block: usize,
    pub port: usize,
}

/// A free port of a system, as seen from outside.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PortSig {
    pub side: Side,
    pub name: String,
    pub dir: Dir,
    pub kind: Kind,
}

/// Names a free port by interface side and name.
pub type PortRef<'a> = (Side, &'a str);

/// A composite box: member blocks, internal wires, and the free ports.
#[derive(Debug, Clone)]
pub struct System {
    pub(crate) members: Vec<Block>,
    pub(crate) links: Vec<Link>,
    pub(crate) exposed: Vec<Exposed>,
}

impl From<Block> for System {
    fn from(b: Block) -> Self {
        System::of(b)
    }
}

impl System {
    /// A system made of one block with all its ports free. A `#suffix` in a
    /// port name only disambiguates inside the box and is dropped here.
    pub fn of(b: Block) -> System {
        let exposed = b
            .meta
            .ports
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let name = p.name.split('#').next().unwrap_or_default().to_string();
                Exposed { name, side: p.side, block: 0, port: i }
            })
            .collect();
        System { members: vec![b], links: Vec::new(), exposed }
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.members.iter()
    }

    pub fn block_names(&self) -> Vec<String> {
        self.members.iter().map(|b| b.meta.name.clone()).collect()
    }

    /// Free ports, sorted by side then name.
    pub fn ports(&self) -> Vec<PortSig> {
        let mut v: Vec<PortSig> = self.exposed.iter().map(|e| self.sig(e)).collect();
        v.sort();
        v
    }

    fn sig(&self, e: &Exposed) -> PortSig {
        let p = &self.members[e.block].meta.ports[e.port];
        PortSig { side: e.side, name: e.name.clone(), dir: p.dir, kind: p.kind }
    }

    pub(crate) fn find(&self, r: PortRef<'_>) -> Option<usize> {
        self.exposed.iter().position(|e| e.side == r.0 && e.name == r.1)
    }

    /// Prefixes block names and free-port names.
    pub fn prefixed(mut self, prefix: &str) -> System {
        self.members = self
            .members
            .iter()
            .map(|b| b.renamed(format!("{prefix}{}", b.meta.name)))
            .collect();
        for e in &mut self.exposed {
            e.name = format!("{prefix}{}", e.name);
        }
        self
    }

    /// Renames one free port.
    pub fn rename(mut self, from: PortRef<'_>, to: PortRef<'_>) -> Result<System> {
        let i = self
            .find(from)
            .ok_or_else(|| Error::wiring(from.1, "no such free port to rename"))?;
        self.exposed[i].side = to.0;
        self.exposed[i].name = to.1.to_string();
        self.check_unique()?;
        Ok(self)
    }

    /// Moves every free port on side `from` to side `to`.
    pub fn resided(mut self, from: Side, to: Side) -> Result<System> {
        for e in &mut self.exposed {
            if e.side == from {
                e.side = to;
            }
        }
        self.check_unique()?;
        Ok(self)
    }

    fn check_unique(&self) -> Result<()> {
        for (i, e) in self.exposed.iter().enumerate() {
            if self.exposed[..i].iter().any(|f| f.side == e.side && f.name == e.name) {
                return Err(Error::wiring(
                    format!("{}:{}", e.side, e.name),
                    "free port name used twice",
                ));
            }
        }
        for (i, b) in self.members.iter().enumerate() {
            if self.members[..i].iter().any(|c| c.meta.name == b.meta.name) {
                return Err(Error::wiring(b.meta.name.clone(), "box name used twice"));
            }
        }
        Ok(())
    }

    /// Merges two systems and wires the listed free-port pairs together.
    /// Every other free port stays free.
    pub fn join(self, other: System, bindings: &[(PortRef<'_>, PortRef<'_>)]) -> Result<System> {
        let offset = self.members.len();
        let mut used_a = vec![false; self.exposed.len()];
        let mut used_b = vec![false; other.exposed.len()];
        let mut links = self.links.clone();
        links.extend(other.links.iter().map(|l| Link {
            from: (l.from.0 + offset, l.from.1),
            to: (l.to.0 + offset, l.to.1),
        }));
        for (ra, rb) in bindings {
            let ia = self
                .find(*ra)
                .ok_or_else(|| Error::wiring(format!("{}:{}", ra.0, ra.1), "no such free port"))?;
            let ib = other
                .find(*rb)
                .ok_or_else(|| Error::wiring(format!("{}:{}", rb.0, rb.1), "no such free port"))?;
            if used_a[ia] || used_b[ib] {
                return Err(Error::wiring(format!("{}:{}", ra.0, ra.1), "port bound twice"));
            }
            used_a[ia] = true;
            used_b[ib] = true;
            let ea = &self.exposed[ia];
            let eb = &other.exposed[ib];
            let pa = &self.members[ea.block].meta.ports[ea.port];
            let pb = &other.members[eb.block].meta.ports[eb.port];
            if pa.dir == pb.dir {
                return Err(Error::wiring(
                    format!("{}:{}", ra.0, ra.1),
                    format!("direction clash with {}:{}", rb.0, rb.1),
                ));
            }
            if pa.kind != pb.kind {
                return Err(Error::wiring(
                    format!("{}:{}", ra.0, ra.1),
                    format!("kind {} does not match {} on {}:{}", pa.kind, pb.kind, rb.0, rb.1),
                ));
            }
            let a = (ea.block, ea.port);
            let b = (eb.block + offset, eb.port);
            links.push(if pa.dir == Dir::Out { Link { from: a, to: b } } else { Link { from: b, to: a } });
        }
        let mut exposed: Vec<Exposed> = self
            .exposed
            .iter()
            .enumerate()
            .filter(|(i, _)| !used_a[*i])
            .map(|(_, e)| e.clone())
            .collect();
        exposed.extend(
            other
                .exposed
                .iter()
                .enumerate()
                .filter(|(i, _)| !used_b[*i])
                .map(|(_, e)| Exposed { block: e.block + offset, ..e.clone() }),
        );
        let mut members = self.members;
        members.extend(other.members);
        let s = System { members, links, exposed };
        s.check_unique()?;
        Ok(s)
    }
}

/// Attaches `converter` to the `side` interface of `resource`.
///
/// The converter's free ports on `side` are its inner interface and must match
/// the resource's `side` ports exactly (name, kind, opposite direction). Its
/// `Outer` ports become the new `side` interface.
pub fn attach(converter: impl Into<System>, resource: impl Into<System>, side: Side) -> Result<System> {
    let converter = converter.into();
    let resource = resource.into();
    let inner: Vec<String> = converter
        .exposed
        .iter()
        .filter(|e| e.side == side)
        .map(|e| e.name.clone())
        .collect();
    for e in resource.exposed.iter().filter(|e| e.side == side) {
        if !inner.contains(&e.name) {
            return Err(Error::wiring(
                format!("{side}:{}", e.name),
                "resource port has no matching converter port",
            ));
        }
    }
    for n in &inner {
        if resource.find((side, n)).is_none() {
            return Err(Error::wiring(
                format!("{side}:{n}"),
                "converter port has no matching resource port",
            ));
        }
    }
    let bindings: Vec<(PortRef<'_>, PortRef<'_>)> =
        inner.iter().map(|n| ((side, n.as_str()), (side, n.as_str()))).collect();
    let joined = resource.join(converter, &bindings)?;
    joined.resided(Side::Outer, side)
}

/// Side-by-side composition with no cross wiring. With two or more members,
/// box and port names get an `i/` prefix.
pub fn parallel(systems: Vec<System>) -> Result<System> {
    if systems.is_empty() {
        return Err(Error::Input("parallel composition needs at least one box".into()));
    }
    if systems.len() == 1 {
        return Ok(systems.into_iter().next().unwrap());
    }
    let mut it = systems.into_iter().enumerate();
    let (_, first) = it.next().unwrap();
    let mut acc = first.prefixed("0/");
    for (i, s) in it {
        acc = acc.join(s.prefixed(&format!("{i}/")), &[])?;
    }
    Ok(acc)
}
