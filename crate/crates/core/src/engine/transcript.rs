use std::io::{self, Write};

use serde::Serialize;

use super::run::Experiment;
use crate::spacetime::{precedes_unchecked, SpacetimePoint, C};

/// One delivered message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub trial: u64,
    pub wire: String,
    pub payload: String,
    pub x: [f64; 3],
    pub t: f64,
    pub seq: u64,
    #[serde(skip)]
    pub(crate) wire_id: u32,
    /// Processing step at which it was delivered.
    #[serde(skip)]
    pub(crate) order: u64,
    /// Step whose handler emitted it; -1 for activation.
    #[serde(skip)]
    pub(crate) cause: i64,
    #[serde(skip)]
    pub(crate) from: (usize, usize),
    #[serde(skip)]
    pub(crate) to: (usize, usize),
}

impl Event {
    pub fn point(&self) -> SpacetimePoint {
        SpacetimePoint { x: self.x, t: self.t }
    }
}

/// Events of one run in (t, wire id, seq) order, plus which boxes aborted.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    events: Vec<Event>,
    aborts: Vec<(String, bool)>,
}

impl Transcript {
    pub(crate) fn new(mut events: Vec<Event>, aborts: Vec<(String, bool)>) -> Self {
        events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.wire_id.cmp(&b.wire_id)).then(a.seq.cmp(&b.seq)));
        Transcript { events, aborts }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Boxes that marked themselves aborted.
    pub fn aborted(&self) -> Vec<&str> {
        self.aborts.iter().filter(|(_, a)| *a).map(|(n, _)| n.as_str()).collect()
    }

    /// First event whose wire name contains `pat`.
    pub fn first(&self, pat: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.wire.contains(pat))
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Re-checks every declared constraint against the recorded events.
    pub fn audit(&self, exp: &Experiment) -> AuditReport {
        let mut entries = Vec::new();
        for (b, meta) in exp.metas.iter().enumerate() {
            for c in &meta.constraints {
                let outs: Vec<&Event> = self.events.iter().filter(|e| e.from == (b, c.output)).collect();
                if outs.is_empty() {
                    continue;
                }
                let inputs: Vec<&str> = c.inputs.iter().map(|&i| meta.ports[i].name.as_str()).collect();
                let rule = format!(
                    "{}: {} {} {}",
                    meta.name,
                    inputs.join(","),
                    if c.strict { "=>" } else { "<" },
                    meta.ports[c.output].name
                );
                let mut problem = None;
                'outer: for o in &outs {
                    for &i in &c.inputs {
                        let ins: Vec<&Event> = self
                            .events
                            .iter()
                            .filter(|e| e.to == (b, i) && (e.order as i64) <= o.cause)
                            .collect();
                        if c.strict && ins.is_empty() {
                            problem = Some(format!("{} emitted at t={} without input {}", meta.ports[c.output].name, o.t, meta.ports[i].name));
                            break 'outer;
                        }
                        for e in ins {
                            if !precedes_unchecked(&e.point(), &o.point(), C) {
                                problem = Some(format!(
                                    "{} at {} not after {} at {}",
                                    meta.ports[c.output].name,
                                    o.point(),
                                    meta.ports[i].name,
                                    e.point()
                                ));
                                break 'outer;
                            }
                        }
                    }
                }
                entries.push(AuditEntry { rule, ok: problem.is_none(), detail: problem.unwrap_or_default() });
            }
        }
        AuditReport { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub rule: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
    }

    pub fn push(&mut self, rule: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.entries.push(AuditEntry { rule: rule.into(), ok, detail: detail.into() });
    }
}
