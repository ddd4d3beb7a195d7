//! The six constructions and their simulators, each packaged as three
//! checkable cases (honest, dishonest Alice, dishonest Bob).
//!
//! A case holds the real system (protocol converters around the available
//! resource) and the ideal system (the target primitive, with a simulator on
//! the dishonest side). Both expose the same free ports, so any distinguisher
//! closes either one.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::exact::enumerate;
use crate::engine::{run_trial, Dir, Experiment, Kind, Payload, PortSig, RunOptions, Script, Side, System, Transcript, View, AuditReport};
use crate::error::{Error, Result};
use crate::spacetime::{precedes_unchecked, C};
use crate::stats::{self, AdvantageReport, IntervalKind, Mode};

mod common;
mod pi1;
mod pi2;
mod pi3;
mod pi4;
mod pi5;
mod pi6;

pub use common::SubsetPolicy;
pub use pi1::pi1_cases;
pub use pi2::pi2_cases;
pub use pi3::{pi3_cases, pi3_cases_with_reveal_delay};
pub use pi4::{pi4_abort, pi4_both_known, pi4_cases, pi4_cases_with};
pub use pi5::{pi5_cases_with, pi5_cheater,
    pi5_cases, pi5_cheat_success, pi5_check_params, pi5_honest_abort, pi5_honest_abort_oracle, pi5_skip_pass_rate,
    Pi5Goal,
};
pub use pi6::{pi6_binding_attack, pi6_cases, pi6_cases_with, Pi6Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    #[serde(rename = "honest")]
    Honest,
    #[serde(rename = "dA")]
    DishonestAlice,
    #[serde(rename = "dB")]
    DishonestBob,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Honest, Condition::DishonestAlice, Condition::DishonestBob];

    pub fn tag(self) -> &'static str {
        match self {
            Condition::Honest => "honest",
            Condition::DishonestAlice => "dA",
            Condition::DishonestBob => "dB",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// The advantage a case claims never to exceed.
#[derive(Debug, Clone, PartialEq)]
pub enum Claim {
    Perfect,
    /// An exact probability, with the looser analytic envelope above it.
    Bounded { exact: BigRational, envelope: f64, note: String },
}

impl Claim {
    pub fn exact(&self) -> BigRational {
        match self {
            Claim::Perfect => BigRational::zero(),
            Claim::Bounded { exact, .. } => exact.clone(),
        }
    }

    pub fn value(&self) -> f64 {
        self.exact().to_f64().unwrap_or(f64::NAN)
    }
}

/// A named distinguisher that always goes with a case.
#[derive(Debug, Clone)]
pub struct Reference {
    pub name: String,
    pub system: System,
    /// Boxes of the real system whose draws cannot change this
    /// distinguisher's output; exact mode enumerates them as fixed.
    pub pinned: Vec<String>,
}

impl Reference {
    pub fn new(name: &str, system: System) -> Reference {
        Reference { name: name.into(), system, pinned: Vec::new() }
    }

    pub fn pin(mut self, boxes: &[&str]) -> Reference {
        self.pinned = boxes.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// A chain of message groups that must be causally ordered: every message
/// matching a stage precedes every message matching the next stage. Patterns
/// are substrings of wire names; a stage with no matching message is skipped.
#[derive(Debug, Clone)]
pub struct Clause {
    pub name: String,
    pub stages: Vec<Vec<String>>,
}

impl Clause {
    pub fn new(name: &str, stages: &[&[&str]]) -> Clause {
        Clause {
            name: name.into(),
            stages: stages.iter().map(|s| s.iter().map(|p| p.to_string()).collect()).collect(),
        }
    }

    pub fn check(&self, t: &Transcript) -> std::result::Result<(), String> {
        let groups: Vec<Vec<_>> = self
            .stages
            .iter()
            .map(|pats| t.events().iter().filter(|e| pats.iter().any(|p| e.wire.contains(p.as_str()))).collect())
            .filter(|g: &Vec<_>| !g.is_empty())
            .collect();
        for w in groups.windows(2) {
            for a in &w[0] {
                for b in &w[1] {
                    if !precedes_unchecked(&a.point(), &b.point(), C) {
                        return Err(format!("{} at {} does not precede {} at {}", a.wire, a.point(), b.wire, b.point()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Stages with at least one matching message.
    pub fn matched(&self, t: &Transcript) -> usize {
        self.stages
            .iter()
            .filter(|pats| t.events().iter().any(|e| pats.iter().any(|p| e.wire.contains(p.as_str()))))
            .count()
    }
}

pub struct ConstructionCase {
    pub label: String,
    pub condition: Condition,
    pub real: System,
    pub ideal: System,
    pub claim: Claim,
    pub references: Vec<Reference>,
    /// Input times for scripted distinguishers; unlisted inputs go at t = 0.
    pub schedule: Vec<(Side, String, f64)>,
    pub clauses: Vec<Clause>,
}

impl fmt::Debug for ConstructionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstructionCase")
            .field("label", &self.label)
            .field("condition", &self.condition)
            .field("claim", &self.claim)
            .finish_non_exhaustive()
    }
}

/// Input vectors above this count are not scanned exhaustively.
pub const MAX_SCRIPTS: u64 = 1 << 12;

impl ConstructionCase {
    pub fn new(construction: &str, condition: Condition, real: System, ideal: System, claim: Claim) -> Result<Self> {
        let (pr, pi) = (real.ports(), ideal.ports());
        if pr != pi {
            let only_real: Vec<String> = pr.iter().filter(|p| !pi.contains(p)).map(show).collect();
            let only_ideal: Vec<String> = pi.iter().filter(|p| !pr.contains(p)).map(show).collect();
            return Err(Error::wiring(
                format!("{construction}.{condition}"),
                format!("real and ideal ports differ: real has {only_real:?}, ideal has {only_ideal:?}"),
            ));
        }
        Ok(ConstructionCase {
            label: format!("{construction}.{}", condition.tag()),
            condition,
            real,
            ideal,
            claim,
            references: Vec::new(),
            schedule: Vec::new(),
            clauses: Vec::new(),
        })
    }

    pub fn with_reference(mut self, r: Reference) -> Self {
        self.references.push(r);
        self
    }

    pub fn at(mut self, side: Side, port: &str, t: f64) -> Self {
        self.schedule.push((side, port.into(), t));
        self
    }

    pub fn with_clause(mut self, c: Clause) -> Self {
        self.clauses.push(c);
        self
    }

    fn time_of(&self, side: Side, port: &str) -> f64 {
        self.schedule
            .iter()
            .find(|(s, p, _)| *s == side && p == port)
            .map(|(_, _, t)| *t)
            .unwrap_or(0.0)
    }

    /// System inputs with the finite payload domain a script may feed, or
    /// `None` if some input has no such domain.
    pub fn input_domains(&self) -> Option<Vec<(PortSig, Vec<Payload>)>> {
        let mut out = Vec::new();
        for p in self.real.ports().into_iter().filter(|p| p.dir == Dir::In) {
            let dom = match p.kind {
                Kind::Bits(w) if w <= 12 => (0..1u64 << w).map(|v| Payload::bits(v, w)).collect(),
                Kind::Symbol => vec![Payload::Open],
                _ => return None,
            };
            out.push((p, dom));
        }
        Some(out)
    }

    /// Number of input vectors, if the inputs are scriptable.
    pub fn script_count(&self) -> Option<u64> {
        let doms = self.input_domains()?;
        doms.iter().try_fold(1u64, |acc, (_, d)| acc.checked_mul(d.len() as u64))
    }

    /// A non-adaptive distinguisher feeding `inputs` and deciding with `decide`.
    pub fn script(&self, inputs: &[(PortSig, Payload)], decide: impl Fn(&crate::engine::Seen) -> bool + Send + Sync + 'static) -> Result<System> {
        let mut s = Script::against(&self.real);
        for (p, x) in inputs {
            s = s.feed(p.side, &p.name, *x, self.time_of(p.side, &p.name))?;
        }
        s.decide(decide).build()
    }

    /// Every input vector, in a fixed order.
    pub fn input_vectors(&self) -> Result<Vec<Vec<(PortSig, Payload)>>> {
        let doms = self
            .input_domains()
            .ok_or_else(|| Error::Usage(format!("{} has inputs without a finite script domain", self.label)))?;
        let count = self.script_count().unwrap_or(u64::MAX);
        if count > MAX_SCRIPTS {
            return Err(Error::Size(format!("{count} input vectors for {}, above {MAX_SCRIPTS}", self.label)));
        }
        let mut out = Vec::with_capacity(count as usize);
        for mut idx in 0..count {
            let mut v = Vec::with_capacity(doms.len());
            for (p, d) in &doms {
                let n = d.len() as u64;
                v.push((p.clone(), d[(idx % n) as usize]));
                idx /= n;
            }
            out.push(v);
        }
        Ok(out)
    }

    /// A seeded random input vector, for audits.
    pub fn random_inputs(&self, seed: u64) -> Option<Vec<(PortSig, Payload)>> {
        let doms = self.input_domains()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(doms.into_iter().map(|(p, d)| {
            let i = rng.gen_range(0..d.len());
            (p, d[i])
        }).collect())
    }

    /// Best advantage over every deterministic non-adaptive distinguisher:
    /// the largest total variation distance between real and ideal views
    /// over all input vectors. Views are compared as per-port message lists,
    /// ignoring arrival times and the interleaving across ports.
    pub fn exhaustive(&self, limit: u64) -> Result<Exhaustive> {
        let vectors = self.input_vectors()?;
        let mut best = Exhaustive { value: BigRational::zero(), witness: String::new(), vectors: vectors.len(), leaves: 0 };
        for v in &vectors {
            let d = self.script(v, |_| false)?;
            let (pr, lr) = canonical_views(&Experiment::new(self.real.clone(), d.clone())?, limit)?;
            let (pi, li) = canonical_views(&Experiment::new(self.ideal.clone(), d)?, limit)?;
            best.leaves += lr + li;
            let tv = stats::total_variation(&pr, &pi);
            if tv > best.value || best.witness.is_empty() {
                best.value = tv;
                best.witness = v.iter().map(|(p, x)| format!("{}:{}={x}", p.side, p.name)).collect::<Vec<_>>().join(",");
            }
        }
        Ok(best)
    }

    /// Distinguishers used for audits: every reference plus, when inputs are
    /// scriptable, one seeded random script.
    pub fn audit_distinguishers(&self, seed: u64) -> Result<Vec<System>> {
        let mut out: Vec<System> = self.references.iter().map(|r| r.system.clone()).collect();
        if let Some(v) = self.random_inputs(seed) {
            out.push(self.script(&v, |_| false)?);
        }
        Ok(out)
    }

    /// Runs real and ideal with every audit distinguisher for `seed` and
    /// re-checks declared constraints plus this case's ordering clauses.
    pub fn audit(&self, seed: u64) -> Result<AuditReport> {
        let mut report = AuditReport::default();
        for d in self.audit_distinguishers(seed)? {
            for (which, sys) in [("real", &self.real), ("ideal", &self.ideal)] {
                let exp = Experiment::new(sys.clone(), d.clone())?;
                let out = run_trial(&exp, seed, &RunOptions::recording())?;
                let t = out.transcript.expect("recording");
                for e in t.audit(&exp).entries {
                    report.push(format!("{which} {}", e.rule), e.ok, e.detail);
                }
                if which == "real" {
                    // clauses describe complete runs; an abort cuts the flow short
                    let aborted = t.aborted();
                    for c in &self.clauses {
                        if !aborted.is_empty() {
                            report.push(format!("clause {}", c.name), true, format!("skipped, {} aborted", aborted.join(", ")));
                            continue;
                        }
                        let r = c.check(&t);
                        report.push(format!("clause {}", c.name), r.is_ok(), r.err().unwrap_or_default());
                    }
                }
            }
        }
        Ok(report)
    }
}

fn show(p: &PortSig) -> String {
    format!("{}:{} {:?} {}", p.side, p.name, p.dir, p.kind)
}

/// Result of [`ConstructionCase::exhaustive`].
#[derive(Debug, Clone)]
pub struct Exhaustive {
    pub value: BigRational,
    /// Input vector achieving the maximum.
    pub witness: String,
    pub vectors: usize,
    pub leaves: u64,
}

fn canonical(v: &View) -> View {
    let mut x = v.0.clone();
    x.sort_by_key(|(p, _)| *p);
    View(x)
}

fn canonical_views(exp: &Experiment, limit: u64) -> Result<(HashMap<View, BigRational>, u64)> {
    let d = enumerate(exp, limit, &RunOptions::viewing(), |o| canonical(o.view.as_ref().expect("viewing")))?;
    Ok((d.outcomes, d.leaves))
}

/// How to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub mode: Mode,
    pub limit: u64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { mode: Mode::Exact, limit: crate::engine::exact::DEFAULT_LIMIT, trials: 100_000, seed: 1 }
    }
}

/// Advantage of one distinguisher on a case. Exact mode reports a size
/// error when the branch count is above `limit`.
pub fn evaluate_case(case: &ConstructionCase, d: &System, s: &EvalSettings) -> Result<AdvantageReport> {
    evaluate_pinned(case, d, &[], s)
}

fn evaluate_pinned(case: &ConstructionCase, d: &System, pinned: &[String], s: &EvalSettings) -> Result<AdvantageReport> {
    let er = Experiment::new(case.real.clone(), d.clone())?;
    let ei = Experiment::new(case.ideal.clone(), d.clone())?;
    match s.mode {
        Mode::Exact => {
            let (pr, lr) = stats::exact_probability_pinned(&er, s.limit, pinned)?;
            let (pi, li) = stats::exact_probability(&ei, s.limit)?;
            let v = num_traits::Signed::abs(&(pr - pi));
            Ok(AdvantageReport::exact(&v, lr + li))
        }
        Mode::MonteCarlo => stats::estimate_difference(&er, &ei, s.trials, s.seed, IntervalKind::Hoeffding),
    }
}

/// One measured advantage against the case's claim.
#[derive(Debug, Clone, Serialize)]
pub struct Assessment {
    pub label: String,
    pub condition: Condition,
    pub distinguisher: String,
    pub report: AdvantageReport,
    pub claimed_bound: f64,
    pub claimed_exact: String,
    pub verdict: bool,
    /// Why exact mode fell back to sampling, if it did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

fn verdict(case: &ConstructionCase, r: &AdvantageReport, exact: Option<&BigRational>) -> bool {
    match exact {
        Some(v) => *v <= case.claim.exact(),
        None => r.ci_low <= case.claim.value() + 1e-12,
    }
}

/// Evaluates the exhaustive script family (when available) and every
/// reference distinguisher. In exact mode a size error falls back to Monte
/// Carlo with the configured trials and seed.
pub fn assess_case(case: &ConstructionCase, s: &EvalSettings) -> Result<Vec<Assessment>> {
    let mut out = Vec::new();
    let claimed_exact = case.claim.exact().to_string();
    let make = |name: String, report: AdvantageReport, exact: Option<BigRational>, fallback: Option<String>| Assessment {
        label: case.label.clone(),
        condition: case.condition,
        distinguisher: name,
        verdict: verdict(case, &report, exact.as_ref()),
        report,
        claimed_bound: case.claim.value(),
        claimed_exact: claimed_exact.clone(),
        fallback,
    };
    if s.mode == Mode::Exact && case.script_count().is_some_and(|n| n <= MAX_SCRIPTS) {
        match case.exhaustive(s.limit) {
            Ok(e) => {
                let r = AdvantageReport::exact(&e.value, e.leaves);
                out.push(make(format!("exhaustive({} input vectors; worst {})", e.vectors, e.witness), r, Some(e.value), None));
            }
            Err(Error::Size(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for r in &case.references {
        let res = evaluate_pinned(case, &r.system, &r.pinned, s);
        match res {
            Ok(rep) => {
                let exact = rep.exact.as_ref().and_then(|x| x.parse::<BigRational>().ok());
                out.push(make(r.name.clone(), rep, exact, None));
            }
            Err(Error::Size(why)) => {
                let mc = EvalSettings { mode: Mode::MonteCarlo, ..*s };
                let rep = evaluate_pinned(case, &r.system, &[], &mc)?;
                out.push(make(r.name.clone(), rep, None, Some(why)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Parameters shared by the case constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub k: u32,
    pub n: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { k: 4, n: 12 }
    }
}

/// Construction names accepted by [`cases`].
pub const CONSTRUCTIONS: [&str; 6] = ["pi1", "pi2", "pi3", "pi4", "pi5", "pi6"];

/// The three cases of a construction.
pub fn cases(construction: &str, p: Params) -> Result<Vec<ConstructionCase>> {
    match construction {
        "pi1" => pi1_cases(),
        "pi2" => pi2_cases(),
        "pi3" => pi3_cases(),
        "pi4" => pi4_cases(p.k),
        "pi5" => pi5_cases(p.n),
        "pi6" => pi6_cases(p.k),
        other => Err(Error::UnknownLabel(other.into())),
    }
}

/// Looks up a case by label such as `pi4.dB`.
pub fn case(label: &str, p: Params) -> Result<ConstructionCase> {
    let (c, cond) = label.split_once('.').ok_or_else(|| Error::UnknownLabel(label.into()))?;
    let all = cases(c, p).map_err(|e| match e {
        Error::UnknownLabel(_) => Error::UnknownLabel(label.into()),
        other => other,
    })?;
    all.into_iter()
        .find(|x| x.condition.tag() == cond)
        .ok_or_else(|| Error::UnknownLabel(label.into()))
}

/// Every registered case label.
pub fn labels() -> Vec<String> {
    CONSTRUCTIONS
        .iter()
        .flat_map(|c| Condition::ALL.iter().map(move |d| format!("{c}.{}", d.tag())))
        .collect()
}
