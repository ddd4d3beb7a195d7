use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::system::{Exposed, System};
use super::transcript::{Event, Transcript};
use super::{BlockMeta, Dir, Logic, Payload, PortRef, Side, EVENT_BUDGET};
use crate::error::{Error, Result};
use crate::quantum::{self, Basis, QubitTable};
use crate::spacetime::{precedes_unchecked, SpacetimePoint, C};

/// Supplies every random draw made during a run.
pub trait RandomSource {
    /// Uniform value in `0..n`.
    fn uniform(&mut self, block: usize, n: u64) -> u64;
    /// Index `i` with probability `weights[i] / sum(weights)`.
    fn weighted(&mut self, block: usize, weights: &[u64]) -> usize;
}

/// Seeded sampling: an independent ChaCha stream per (box, trial).
pub struct MonteCarlo {
    seed: u64,
    trial: u64,
    streams: Vec<Option<ChaCha8Rng>>,
}

impl MonteCarlo {
    pub fn new(seed: u64, trial: u64) -> Self {
        MonteCarlo { seed, trial, streams: Vec::new() }
    }

    pub fn set_trial(&mut self, trial: u64) {
        self.trial = trial;
        self.streams.iter_mut().for_each(|s| *s = None);
    }

    fn stream(&mut self, block: usize) -> &mut ChaCha8Rng {
        if self.streams.len() <= block {
            self.streams.resize_with(block + 1, || None);
        }
        let (seed, trial) = (self.seed, self.trial);
        self.streams[block].get_or_insert_with(|| {
            let mut key = [0u8; 32];
            key[..8].copy_from_slice(&splitmix(seed).to_le_bytes());
            key[8..16].copy_from_slice(&splitmix(seed ^ 0x5eed).to_le_bytes());
            key[16..24].copy_from_slice(&splitmix(trial).to_le_bytes());
            key[24..].copy_from_slice(&splitmix(trial.wrapping_add(0x7a1)).to_le_bytes());
            let mut r = ChaCha8Rng::from_seed(key);
            r.set_stream(block as u64);
            r
        })
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSource for MonteCarlo {
    fn uniform(&mut self, block: usize, n: u64) -> u64 {
        if n <= 1 {
            return 0;
        }
        self.stream(block).gen_range(0..n)
    }

    fn weighted(&mut self, block: usize, weights: &[u64]) -> usize {
        let total: u64 = weights.iter().sum();
        let mut r = self.stream(block).gen_range(0..total);
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return i;
            }
            r -= w;
        }
        unreachable!("weights sum to total")
    }
}

/// Handler context: the current point, output buffer, randomness and qubits.
pub struct Cx<'a> {
    now: SpacetimePoint,
    block: usize,
    meta: &'a BlockMeta,
    out: &'a mut Vec<(usize, Payload, f64)>,
    wakes: &'a mut Vec<f64>,
    rng: &'a mut dyn RandomSource,
    qubits: &'a mut QubitTable,
    decision: &'a mut Option<bool>,
    aborted: &'a mut bool,
}

impl Cx<'_> {
    pub fn now(&self) -> SpacetimePoint {
        self.now
    }

    pub fn t(&self) -> f64 {
        self.now.t
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    /// Emits on `port` at the current time.
    pub fn send(&mut self, port: usize, p: Payload) {
        self.out.push((port, p, self.now.t));
    }

    /// Emits on `port` at time `t`, located at the port's site.
    pub fn send_at(&mut self, port: usize, p: Payload, t: f64) {
        self.out.push((port, p, t));
    }

    /// Requests a `wake` call at time `t`.
    pub fn wake_at(&mut self, t: f64) {
        self.wakes.push(t);
    }

    pub fn uniform(&mut self, n: u64) -> u64 {
        self.rng.uniform(self.block, n)
    }

    pub fn bit(&mut self) -> u64 {
        self.uniform(2)
    }

    pub fn bits(&mut self, width: u8) -> u64 {
        if width >= 64 {
            let hi = self.uniform(1 << 32);
            let lo = self.uniform(1 << 32);
            return hi << 32 | lo;
        }
        self.uniform(1u64 << width)
    }

    pub fn weighted(&mut self, weights: &[u64]) -> usize {
        self.rng.weighted(self.block, weights)
    }

    pub fn bernoulli(&mut self, p: Ratio<u64>) -> bool {
        if *p.numer() == 0 {
            return false;
        }
        if p.numer() >= p.denom() {
            return true;
        }
        self.weighted(&[*p.numer(), p.denom() - p.numer()]) == 0
    }

    /// Uniformly random `k`-subset of `0..n` as a bitmask.
    pub fn subset(&mut self, n: u32, k: u32) -> u64 {
        let total = binomial(n, k);
        unrank_subset(n, k, self.uniform(total))
    }

    pub fn prepare(&mut self, bit: u8, basis: Basis) -> Payload {
        Payload::Qubit(self.qubits.insert(quantum::prepare(bit, basis)))
    }

    pub fn measure(&mut self, handle: u32, basis: Basis) -> Result<u8> {
        let (rng, block) = (&mut *self.rng, self.block);
        self.qubits.measure_with(handle, basis, || rng.uniform(block, 2) as u8)
    }

    /// Inspects a qubit without measuring it. Only simulators that prepared
    /// the state themselves should rely on this.
    pub fn peek_qubit(&self, handle: u32) -> Option<quantum::Bb84State> {
        self.qubits.get(handle).copied()
    }

    /// Basis a qubit was measured in, if it has been measured.
    pub fn measured_in(&self, handle: u32) -> Option<Basis> {
        self.qubits.measured_in(handle)
    }

    /// Sets the distinguisher's output bit.
    pub fn decide(&mut self, bit: bool) {
        *self.decision = Some(bit);
    }

    pub fn mark_aborted(&mut self) {
        *self.aborted = true;
    }

    pub fn order_error(&self, detail: impl Into<String>) -> Error {
        Error::order(self.meta.name.clone(), detail)
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

/// The `r`-th `k`-subset of `0..n` in colex-free lexicographic order.
pub(crate) fn unrank_subset(n: u32, k: u32, mut r: u64) -> u64 {
    let mut mask = 0u64;
    let mut left = k;
    for i in 0..n {
        if left == 0 {
            break;
        }
        let with = binomial(n - i - 1, left - 1);
        if r < with {
            mask |= 1 << i;
            left -= 1;
        } else {
            r -= with;
        }
    }
    mask
}

pub(crate) struct Wire {
    pub name: String,
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub observed: Option<u16>,
}

/// A closed system: observed system plus a distinguisher covering every free port.
pub struct Experiment {
    pub(crate) metas: Vec<Arc<BlockMeta>>,
    pub(crate) logics: Vec<Box<dyn Logic>>,
    pub(crate) routes: Vec<Vec<Option<u32>>>,
    pub(crate) wires: Vec<Wire>,
    pub(crate) view_ports: Vec<String>,
    pub(crate) observer_start: usize,
}

impl Clone for Experiment {
    fn clone(&self) -> Self {
        Experiment {
            metas: self.metas.clone(),
            logics: self.logics.iter().map(|l| l.clone_logic()).collect(),
            routes: self.routes.clone(),
            wires: self
                .wires
                .iter()
                .map(|w| Wire { name: w.name.clone(), ..*w })
                .collect(),
            view_ports: self.view_ports.clone(),
            observer_start: self.observer_start,
        }
    }
}

impl Clone for Wire {
    fn clone(&self) -> Self {
        Wire { name: self.name.clone(), ..*self }
    }
}

impl Experiment {
    /// Binds every free port of `system` to the same-named, same-side port of
    /// `distinguisher`. Both must be fully covered.
    pub fn new(system: System, distinguisher: impl Into<System>) -> Result<Experiment> {
        let d = distinguisher.into();
        for e in &d.exposed {
            if system.find((e.side, &e.name)).is_none() {
                return Err(Error::wiring(
                    format!("{}:{}", e.side, e.name),
                    "distinguisher port has no matching system port",
                ));
            }
        }
        let mut free: Vec<&Exposed> = system.exposed.iter().collect();
        free.sort_by(|a, b| (a.side, &a.name).cmp(&(b.side, &b.name)));
        let names: Vec<(Side, String)> = free.iter().map(|e| (e.side, e.name.clone())).collect();
        for (side, name) in &names {
            if d.find((*side, name)).is_none() {
                return Err(Error::wiring(
                    format!("{side}:{name}"),
                    "free port not covered by the distinguisher",
                ));
            }
        }
        let bindings: Vec<(PortRef<'_>, PortRef<'_>)> = names
            .iter()
            .map(|(s, n)| ((*s, n.as_str()), (*s, n.as_str())))
            .collect();
        let observer_start = system.members.len();
        let taps: Vec<(usize, usize)> = names
            .iter()
            .map(|(s, n)| {
                let e = &d.exposed[d.find((*s, n)).expect("checked above")];
                (e.block + observer_start, e.port)
            })
            .collect();
        let closed = system.join(d, &bindings)?;
        let view_ports: Vec<String> = names.iter().map(|(s, n)| format!("{s}:{n}")).collect();
        Experiment::compile(closed, observer_start, view_ports, &taps)
    }

    fn compile(
        sys: System,
        observer_start: usize,
        view_ports: Vec<String>,
        taps: &[(usize, usize)],
    ) -> Result<Experiment> {
        if let Some(e) = sys.exposed.first() {
            return Err(Error::wiring(format!("{}:{}", e.side, e.name), "port left unbound"));
        }
        let metas: Vec<Arc<BlockMeta>> = sys.members.iter().map(|b| b.meta.clone()).collect();
        let mut routes: Vec<Vec<Option<u32>>> =
            metas.iter().map(|m| vec![None; m.ports.len()]).collect();
        let mut fed: Vec<Vec<bool>> = metas.iter().map(|m| vec![false; m.ports.len()]).collect();
        let mut wires = Vec::new();
        for (i, l) in sys.links.iter().enumerate() {
            let (fb, fp) = l.from;
            let (tb, tp) = l.to;
            if routes[fb][fp].is_some() || fed[tb][tp] {
                return Err(Error::wiring(
                    format!("{}.{}", metas[fb].name, metas[fb].ports[fp].name),
                    "port bound twice",
                ));
            }
            routes[fb][fp] = Some(i as u32);
            fed[tb][tp] = true;
            let crossing = fb < observer_start && tb >= observer_start;
            let observed = if crossing { taps.iter().position(|t| *t == l.to) } else { None };
            wires.push(Wire {
                name: format!(
                    "{}.{}->{}.{}",
                    metas[fb].name, metas[fb].ports[fp].name, metas[tb].name, metas[tb].ports[tp].name
                ),
                from: l.from,
                to: l.to,
                observed: observed.map(|x| x as u16),
            });
        }
        let logics = sys.members.into_iter().map(|b| b.logic).collect();
        Ok(Experiment { metas, logics, routes, wires, view_ports, observer_start })
    }

    /// Names (`side:name`) of the distinguisher's ports, indexed by view port id.
    pub fn view_ports(&self) -> &[String] {
        &self.view_ports
    }

    pub fn view_port(&self, side: Side, name: &str) -> Option<u16> {
        let key = format!("{side}:{name}");
        self.view_ports.iter().position(|n| *n == key).map(|i| i as u16)
    }

    pub fn block_names(&self) -> Vec<&str> {
        self.metas.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn wire_names(&self) -> Vec<&str> {
        self.wires.iter().map(|w| w.name.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub record: bool,
    pub view: bool,
    pub budget: u64,
    pub trial: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { record: false, view: false, budget: EVENT_BUDGET, trial: 0 }
    }
}

impl RunOptions {
    pub fn recording() -> Self {
        RunOptions { record: true, ..Default::default() }
    }

    pub fn viewing() -> Self {
        RunOptions { view: true, ..Default::default() }
    }
}

/// What the distinguisher received, as (view port id, payload) in delivery order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct View(pub Vec<(u16, Payload)>);

impl View {
    pub fn first(&self, port: u16) -> Option<Payload> {
        self.0.iter().find(|(p, _)| *p == port).map(|(_, x)| *x)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub decision: bool,
    pub transcript: Option<Transcript>,
    pub view: Option<View>,
    pub events: u64,
}

struct Pending {
    t: f64,
    wire: u32,
    seq: u64,
    payload: Payload,
    point: SpacetimePoint,
    cause: i64,
}

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap and we pop the smallest (t, wire, seq)
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t)
            .then(o.wire.cmp(&self.wire))
            .then(o.seq.cmp(&self.seq))
    }
}

enum Call {
    Activate,
    Receive(usize, Payload),
    Wake,
    Finish,
}

/// Reusable run state, so enumeration does not reallocate per leaf.
pub(crate) struct Runner<'e> {
    exp: &'e Experiment,
    logics: Vec<Box<dyn Logic>>,
    heap: BinaryHeap<Pending>,
    consumed: Vec<(u32, u32, SpacetimePoint)>,
    seq: Vec<u64>,
    out: Vec<(usize, Payload, f64)>,
    wakes: Vec<f64>,
    qubits: QubitTable,
    aborted: Vec<bool>,
    heap_end: f64,
}

impl<'e> Runner<'e> {
    pub fn new(exp: &'e Experiment) -> Self {
        Runner {
            exp,
            logics: Vec::with_capacity(exp.logics.len()),
            heap: BinaryHeap::new(),
            consumed: Vec::new(),
            seq: vec![0; exp.wires.len() + exp.metas.len()],
            out: Vec::new(),
            wakes: Vec::new(),
            qubits: QubitTable::default(),
            aborted: vec![false; exp.metas.len()],
            heap_end: 0.0,
        }
    }

    pub fn run(&mut self, rng: &mut dyn RandomSource, opts: &RunOptions) -> Result<RunOutcome> {
        let exp = self.exp;
        self.logics.clear();
        self.logics.extend(exp.logics.iter().map(|l| l.clone_logic()));
        self.heap.clear();
        self.consumed.clear();
        self.seq.iter_mut().for_each(|s| *s = 0);
        self.qubits.clear();
        self.aborted.iter_mut().for_each(|a| *a = false);
        let mut decision = None;
        let mut events: Vec<Event> = Vec::new();
        let mut view = View::default();
        let nwires = exp.wires.len() as u32;

        for b in 0..exp.metas.len() {
            let now = exp.metas[b].home.at(0.0);
            self.dispatch(b, Call::Activate, now, rng, &mut decision)?;
            self.flush(b, now, -1)?;
        }

        let mut step: u64 = 0;
        self.heap_end = 0.0;
        while let Some(ev) = self.heap.pop() {
            step += 1;
            self.heap_end = ev.t;
            if step > opts.budget {
                return Err(Error::Runaway(opts.budget));
            }
            if ev.wire >= nwires {
                let b = (ev.wire - nwires) as usize;
                let now = exp.metas[b].home.at(ev.t);
                self.dispatch(b, Call::Wake, now, rng, &mut decision)?;
                self.flush(b, now, step as i64)?;
                continue;
            }
            let w = &exp.wires[ev.wire as usize];
            let (b, p) = w.to;
            self.consumed.push((b as u32, p as u32, ev.point));
            if opts.record {
                events.push(Event {
                    trial: opts.trial,
                    wire: w.name.clone(),
                    payload: ev.payload.to_string(),
                    x: ev.point.x,
                    t: ev.point.t,
                    seq: ev.seq,
                    wire_id: ev.wire,
                    order: step,
                    cause: ev.cause,
                    from: w.from,
                    to: w.to,
                });
            }
            if opts.view {
                if let Some(v) = w.observed {
                    view.0.push((v, ev.payload));
                }
            }
            self.dispatch(b, Call::Receive(p, ev.payload), ev.point, rng, &mut decision)?;
            self.flush(b, ev.point, step as i64)?;
        }

        let end = self.heap_end;
        for b in 0..exp.metas.len() {
            let now = exp.metas[b].home.at(end);
            self.dispatch(b, Call::Finish, now, rng, &mut decision)?;
            self.out.clear();
            self.wakes.clear();
        }

        let transcript = opts.record.then(|| {
            let aborts = exp
                .metas
                .iter()
                .zip(self.aborted.iter())
                .map(|(m, a)| (m.name.clone(), *a))
                .collect();
            Transcript::new(events, aborts)
        });
        Ok(RunOutcome {
            decision: decision.unwrap_or(false),
            transcript,
            view: opts.view.then_some(view),
            events: step,
        })
    }

    fn dispatch(
        &mut self,
        b: usize,
        call: Call,
        now: SpacetimePoint,
        rng: &mut dyn RandomSource,
        decision: &mut Option<bool>,
    ) -> Result<()> {
        let meta = &*self.exp.metas[b];
        let mut cx = Cx {
            now,
            block: b,
            meta,
            out: &mut self.out,
            wakes: &mut self.wakes,
            rng,
            qubits: &mut self.qubits,
            decision,
            aborted: &mut self.aborted[b],
        };
        let logic = &mut self.logics[b];
        match call {
            Call::Activate => logic.activate(&mut cx),
            Call::Receive(port, payload) => logic.receive(port, payload, &mut cx),
            Call::Wake => logic.wake(&mut cx),
            Call::Finish => logic.finish(&mut cx),
        }
    }

    fn flush(&mut self, b: usize, now: SpacetimePoint, cause: i64) -> Result<()> {
        let exp = self.exp;
        let meta = &*exp.metas[b];
        for (port, payload, t) in self.out.drain(..) {
            let p = meta.ports.get(port).ok_or_else(|| {
                Error::Usage(format!("{} emitted on unknown port index {port}", meta.name))
            })?;
            if p.dir != Dir::Out {
                return Err(Error::Usage(format!("{} emitted on input port {}", meta.name, p.name)));
            }
            if !p.kind.admits(payload) {
                return Err(Error::wiring(
                    format!("{}.{}", meta.name, p.name),
                    format!("payload {payload} does not fit kind {}", p.kind),
                ));
            }
            if !(t >= now.t) || !t.is_finite() {
                return Err(Error::Causality(format!(
                    "{}.{} emitted at t={t}, before the triggering event at {now}",
                    meta.name, p.name
                )));
            }
            let point = meta.point(port, t);
            for c in meta.constraints.iter().filter(|c| c.output == port) {
                for &i in &c.inputs {
                    let mut seen = false;
                    for (cb, cp, at) in &self.consumed {
                        if *cb as usize == b && *cp as usize == i {
                            seen = true;
                            if !precedes_unchecked(at, &point, C) {
                                return Err(Error::Causality(format!(
                                    "{}.{} at {point} is not in the future of input {} at {at}",
                                    meta.name, p.name, meta.ports[i].name
                                )));
                            }
                        }
                    }
                    if c.strict && !seen {
                        return Err(Error::Causality(format!(
                            "{}.{} at {point} depends on input {} which has not arrived",
                            meta.name, p.name, meta.ports[i].name
                        )));
                    }
                }
            }
            let wire = exp.routes[b][port].ok_or_else(|| {
                Error::wiring(format!("{}.{}", meta.name, p.name), "emission on an unbound port")
            })?;
            let seq = self.seq[wire as usize];
            self.seq[wire as usize] += 1;
            self.heap.push(Pending { t, wire, seq, payload, point, cause });
        }
        let nwires = exp.wires.len() as u32;
        for t in self.wakes.drain(..) {
            if !(t >= now.t) || !t.is_finite() {
                return Err(Error::Causality(format!(
                    "{} asked to wake at t={t}, before {now}",
                    meta.name
                )));
            }
            let wire = nwires + b as u32;
            let seq = self.seq[wire as usize];
            self.seq[wire as usize] += 1;
            self.heap.push(Pending {
                t,
                wire,
                seq,
                payload: Payload::Bot,
                point: meta.home.at(t),
                cause,
            });
        }
        Ok(())
    }
}

/// One seeded run with a recorded transcript (trial 0).
pub fn run(exp: &Experiment, seed: u64) -> Result<(bool, Transcript)> {
    let out = run_trial(exp, seed, &RunOptions::recording())?;
    Ok((out.decision, out.transcript.expect("recording was requested")))
}

/// One seeded run of trial `opts.trial`.
pub fn run_trial(exp: &Experiment, seed: u64, opts: &RunOptions) -> Result<RunOutcome> {
    let mut rng = MonteCarlo::new(seed, opts.trial);
    Runner::new(exp).run(&mut rng, opts)
}

/// Runs `trials` seeded trials and counts how often the distinguisher outputs 1.
pub fn count_ones(exp: &Experiment, seed: u64, trials: u64) -> Result<u64> {
    let mut runner = Runner::new(exp);
    let mut rng = MonteCarlo::new(seed, 0);
    let mut ones = 0;
    let mut opts = RunOptions::default();
    for trial in 0..trials {
        rng.set_trial(trial);
        opts.trial = trial;
        if runner.run(&mut rng, &opts)?.decision {
            ones += 1;
        }
    }
    Ok(ones)
}
