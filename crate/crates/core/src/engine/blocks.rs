use std::sync::Arc;

use super::system::System;
use super::{Block, Cx, Dir, Kind, Logic, Payload, Side, Site};
use crate::error::{Error, Result};

#[derive(Clone)]
struct ChannelLogic;

impl Logic for ChannelLogic {
    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        cx.send_at(port + 1, msg, cx.t() + 1.0);
        Ok(())
    }

    crate::clone_logic!();
}

/// Authentic channel from `from` to the other party. Each listed wire is a free
/// input on the sender's side and a same-named free output on the receiver's
/// side; delivery takes one time unit.
pub fn channel(name: &str, from: Side, wires: &[(&str, Kind)]) -> Result<System> {
    let home = Site::of(from).ok_or_else(|| Error::Input("a channel needs a sending party".into()))?;
    let mut b = Block::build(name, home);
    for (w, kind) in wires {
        b = b.input(format!("{w}>"), from, *kind).output(format!("{w}<"), from.other(), *kind);
    }
    for (w, _) in wires {
        b = b.after(&[format!("{w}>")], &format!("{w}<"));
    }
    let mut sys = System::of(b.finish(ChannelLogic)?);
    for (w, _) in wires {
        sys = sys
            .rename((from, &format!("{w}>")), (from, w))?
            .rename((from.other(), &format!("{w}<")), (from.other(), w))?;
    }
    Ok(sys)
}

/// Messages a [`Script`] received, with the port it arrived on.
#[derive(Debug, Clone, Default)]
pub struct Seen {
    ports: Arc<Vec<(Side, String)>>,
    got: Vec<(usize, Payload, f64)>,
}

impl Seen {
    /// First payload received on `(side, name)`.
    pub fn get(&self, side: Side, name: &str) -> Option<Payload> {
        self.all(side, name).next()
    }

    pub fn all<'a>(&'a self, side: Side, name: &'a str) -> impl Iterator<Item = Payload> + 'a {
        self.got
            .iter()
            .filter(move |(p, _, _)| self.ports[*p].0 == side && self.ports[*p].1 == name)
            .map(|(_, x, _)| *x)
    }

    /// Value of the first bit-string payload on `(side, name)`.
    pub fn value(&self, side: Side, name: &str) -> Option<u64> {
        self.get(side, name).and_then(Payload::value)
    }

    pub fn time(&self, side: Side, name: &str) -> Option<f64> {
        self.got
            .iter()
            .find(|(p, _, _)| self.ports[*p].0 == side && self.ports[*p].1 == name)
            .map(|(_, _, t)| *t)
    }
}

type Decide = Arc<dyn Fn(&Seen) -> bool + Send + Sync>;

/// A non-adaptive distinguisher: fixed timed inputs and a decision computed
/// from everything received.
#[derive(Clone)]
pub struct Script {
    name: String,
    ports: Vec<(Side, String, Dir, Kind)>,
    feeds: Vec<(usize, Payload, f64)>,
    decide: Decide,
    seen: Seen,
}

impl Script {
    /// A script with one mirrored port for each free port of `sys`.
    pub fn against(sys: &System) -> Script {
        let ports: Vec<_> = sys
            .ports()
            .into_iter()
            .map(|p| (p.side, p.name, p.dir.flip(), p.kind))
            .collect();
        let names = ports.iter().map(|(s, n, _, _)| (*s, n.clone())).collect();
        Script {
            name: "D".into(),
            ports,
            feeds: Vec::new(),
            decide: Arc::new(|_| false),
            seen: Seen { ports: Arc::new(names), got: Vec::new() },
        }
    }

    pub fn named(mut self, name: &str) -> Script {
        self.name = name.into();
        self
    }

    /// Sends `payload` into the system's `(side, name)` port at time `t`.
    pub fn feed(mut self, side: Side, name: &str, payload: Payload, t: f64) -> Result<Script> {
        let i = self
            .ports
            .iter()
            .position(|(s, n, d, _)| *s == side && n == name && *d == Dir::Out)
            .ok_or_else(|| Error::wiring(format!("{side}:{name}"), "no such system input to feed"))?;
        self.feeds.push((i, payload, t));
        Ok(self)
    }

    pub fn decide(mut self, f: impl Fn(&Seen) -> bool + Send + Sync + 'static) -> Script {
        self.decide = Arc::new(f);
        self
    }

    /// The script as a system whose free ports mirror the target's.
    pub fn build(self) -> Result<System> {
        let mut b = Block::build(self.name.clone(), Site::Alice);
        for (s, n, d, k) in &self.ports {
            b = b.port(format!("{s}:{n}"), *s, *d, *k);
        }
        let ports = self.ports.clone();
        let mut sys = System::of(b.finish(self)?);
        for (s, n, _, _) in &ports {
            sys = sys.rename((*s, &format!("{s}:{n}")), (*s, n))?;
        }
        Ok(sys)
    }
}

impl Logic for Script {
    fn activate(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        for &(p, x, t) in &self.feeds {
            cx.send_at(p, x, t);
        }
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()> {
        self.seen.got.push((port, msg, cx.t()));
        Ok(())
    }

    fn finish(&mut self, cx: &mut Cx<'_>) -> Result<()> {
        cx.decide((self.decide)(&self.seen));
        Ok(())
    }

    crate::clone_logic!();
}
