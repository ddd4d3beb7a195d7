//! Boxes, wiring, and the event loop.
//!
//! Every resource, converter and distinguisher is a [`Block`]: a list of typed
//! ports, a set of declared causality constraints, and a [`Logic`] that reacts
//! to activation, incoming messages and timer wake-ups. Blocks are wired into
//! [`System`]s with [`attach`], [`parallel`] and [`System::join`]. Closing a
//! system with a distinguisher gives an [`Experiment`], which [`run`] executes
//! and [`exact`] enumerates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::SpacetimePoint;

mod blocks;
pub mod exact;
mod run;
mod system;
mod transcript;

pub use blocks::{channel, Script, Seen};
pub(crate) use run::Runner;
pub(crate) use run::binomial;
pub use run::{count_ones, run, run_trial, Cx, Experiment, MonteCarlo, RandomSource, RunOptions, RunOutcome, View};
pub use system::{attach, parallel, PortRef, PortSig, System};
pub use transcript::{AuditEntry, AuditReport, Event, Transcript};

/// Default cap on processed events per run.
pub const EVENT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
    Outer,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
            Side::Outer => Side::Outer,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Alice => "alice",
            Side::Bob => "bob",
            Side::Outer => "outer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    In,
    Out,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::In => Dir::Out,
            Dir::Out => Dir::In,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    /// A string of the given number of bits; width 1 is a plain bit.
    Bits(u8),
    /// Control symbols such as `open` and `recv`.
    Symbol,
    IndexSet,
    Qubit,
}

impl Kind {
    pub const BIT: Kind = Kind::Bits(1);

    /// ⊥ travels on every wire.
    pub fn admits(self, p: Payload) -> bool {
        match (self, p) {
            (_, Payload::Bot) => true,
            (Kind::Bits(w), Payload::Bits { width, value }) => {
                w == width && (w >= 64 || value >> w == 0)
            }
            (Kind::Symbol, Payload::Open | Payload::Recv) => true,
            (Kind::IndexSet, Payload::Set(_)) => true,
            (Kind::Qubit, Payload::Qubit(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Bits(1) => f.write_str("bit"),
            Kind::Bits(w) => write!(f, "bitstring({w})"),
            Kind::Symbol => f.write_str("symbol"),
            Kind::IndexSet => f.write_str("index-set"),
            Kind::Qubit => f.write_str("qubit-handle"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Payload {
    Bits { value: u64, width: u8 },
    /// Abort / failed delivery.
    Bot,
    Open,
    Recv,
    /// Index set as a bitmask over positions 0..64.
    Set(u64),
    Qubit(u32),
}

impl Payload {
    pub fn bit(b: u64) -> Payload {
        Payload::Bits { value: b & 1, width: 1 }
    }

    pub fn bits(value: u64, width: u8) -> Payload {
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        Payload::Bits { value: value & mask, width }
    }

    pub fn value(self) -> Option<u64> {
        match self {
            Payload::Bits { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn set(self) -> Option<u64> {
        match self {
            Payload::Set(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_bot(self) -> bool {
        self == Payload::Bot
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Payload::Bits { value, width } => {
                for i in (0..width).rev() {
                    write!(f, "{}", value >> i & 1)?;
                }
                Ok(())
            }
            Payload::Bot => f.write_str("bot"),
            Payload::Open => f.write_str("open"),
            Payload::Recv => f.write_str("recv"),
            Payload::Set(m) => {
                f.write_str("{")?;
                let mut first = true;
                for i in 0..64 {
                    if m >> i & 1 == 1 {
                        if !first {
                            f.write_str(",")?;
                        }
                        write!(f, "{i}")?;
                        first = false;
                    }
                }
                f.write_str("}")
            }
            Payload::Qubit(h) => write!(f, "q{h}"),
        }
    }
}

/// Where a party's laboratory sits in the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Alice,
    Bob,
}

impl Site {
    pub fn position(self) -> [f64; 3] {
        match self {
            Site::Alice => [0.0, 0.0, 0.0],
            Site::Bob => [1.0, 0.0, 0.0],
        }
    }

    pub fn at(self, t: f64) -> SpacetimePoint {
        SpacetimePoint { x: self.position(), t }
    }

    pub fn of(side: Side) -> Option<Site> {
        match side {
            Side::Alice => Some(Site::Alice),
            Side::Bob => Some(Site::Bob),
            Side::Outer => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub side: Side,
    pub dir: Dir,
    pub kind: Kind,
}

/// Messages on `output` must lie in the causal future of every message
/// consumed so far on `inputs`. A strict constraint also requires each input
/// to have been consumed before the output is emitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub inputs: Vec<usize>,
    pub output: usize,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct BlockMeta {
    pub name: String,
    pub home: Site,
    pub ports: Vec<Port>,
    pub constraints: Vec<Constraint>,
}

impl BlockMeta {
    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    /// Location of a message on port `i` at time `t`.
    pub fn point(&self, i: usize, t: f64) -> SpacetimePoint {
        Site::of(self.ports[i].side).unwrap_or(self.home).at(t)
    }
}

/// Behaviour of a box. Ports are addressed by their declaration index.
pub trait Logic: Send + Sync {
    fn activate(&mut self, _cx: &mut Cx<'_>) -> Result<()> {
        Ok(())
    }

    fn receive(&mut self, port: usize, msg: Payload, cx: &mut Cx<'_>) -> Result<()>;

    fn wake(&mut self, _cx: &mut Cx<'_>) -> Result<()> {
        Ok(())
    }

    /// Called once every message has been delivered. Emissions are ignored.
    fn finish(&mut self, _cx: &mut Cx<'_>) -> Result<()> {
        Ok(())
    }

    fn clone_logic(&self) -> Box<dyn Logic>;
}

/// A box: static description plus its (cloneable) behaviour.
pub struct Block {
    pub(crate) meta: Arc<BlockMeta>,
    pub(crate) logic: Box<dyn Logic>,
}

impl Clone for Block {
    fn clone(&self) -> Self {
        Block { meta: self.meta.clone(), logic: self.logic.clone_logic() }
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Block").field("meta", &self.meta).finish()
    }
}

impl Block {
    pub fn build(name: impl Into<String>, home: Site) -> BlockBuilder {
        BlockBuilder {
            name: name.into(),
            home,
            ports: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn meta(&self) -> &BlockMeta {
        &self.meta
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub(crate) fn renamed(&self, name: String) -> Block {
        let mut meta = (*self.meta).clone();
        meta.name = name;
        Block { meta: Arc::new(meta), logic: self.logic.clone_logic() }
    }
}

pub struct BlockBuilder {
    name: String,
    home: Site,
    ports: Vec<Port>,
    constraints: Vec<(Vec<String>, String, bool)>,
}

impl BlockBuilder {
    pub fn port(mut self, name: impl Into<String>, side: Side, dir: Dir, kind: Kind) -> Self {
        self.ports.push(Port { name: name.into(), side, dir, kind });
        self
    }

    pub fn input(self, name: impl Into<String>, side: Side, kind: Kind) -> Self {
        self.port(name, side, Dir::In, kind)
    }

    pub fn output(self, name: impl Into<String>, side: Side, kind: Kind) -> Self {
        self.port(name, side, Dir::Out, kind)
    }

    /// Declares `inputs ≺ output`.
    pub fn after<S: AsRef<str>>(mut self, inputs: &[S], output: &str) -> Self {
        let inputs = inputs.iter().map(|s| s.as_ref().to_string()).collect();
        self.constraints.push((inputs, output.to_string(), false));
        self
    }

    /// Declares that `output` is computed from `inputs`.
    pub fn computed_from<S: AsRef<str>>(mut self, inputs: &[S], output: &str) -> Self {
        let inputs = inputs.iter().map(|s| s.as_ref().to_string()).collect();
        self.constraints.push((inputs, output.to_string(), true));
        self
    }

    pub fn finish(self, logic: impl Logic + 'static) -> Result<Block> {
        for (i, p) in self.ports.iter().enumerate() {
            if self.ports[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::wiring(
                    format!("{}.{}", self.name, p.name),
                    "duplicate port name within a box",
                ));
            }
        }
        let find = |n: &str, dir: Dir| -> Result<usize> {
            self.ports
                .iter()
                .position(|p| p.name == n && p.dir == dir)
                .ok_or_else(|| {
                    Error::wiring(format!("{}.{n}", self.name), "constraint names an unknown port")
                })
        };
        let mut constraints = Vec::new();
        for (ins, out, strict) in &self.constraints {
            let inputs = ins.iter().map(|n| find(n, Dir::In)).collect::<Result<Vec<_>>>()?;
            constraints.push(Constraint { inputs, output: find(out, Dir::Out)?, strict: *strict });
        }
        Ok(Block {
            meta: Arc::new(BlockMeta {
                name: self.name,
                home: self.home,
                ports: self.ports,
                constraints,
            }),
            logic: Box::new(logic),
        })
    }
}

/// Implements `clone_logic` for a `Clone` logic type.
#[macro_export]
macro_rules! clone_logic {
    () => {
        fn clone_logic(&self) -> Box<dyn $crate::engine::Logic> {
            Box::new(self.clone())
        }
    };
}
