use std::path::PathBuf;

use num_rational::Ratio;
use serde::Serialize;

use relcrypt::attacks::{self, asymptotic_bound, epsilon_threshold, impossibility_bound, Attack, AttackSettings, Theorem};
use relcrypt::engine::{run, AuditEntry, Event, Experiment, System};
use relcrypt::primitives::parse_probability;
use relcrypt::protocols::{
    self, assess_case, pi4_abort, pi4_both_known, pi5_check_params, pi5_honest_abort_oracle, ConstructionCase,
    EvalSettings, Params, CONSTRUCTIONS,
};
use relcrypt::stats::{chernoff_upper, hoeffding_hypergeometric, hypergeometric_tails, to_f64, TailSide};
use relcrypt::{Error, Result};

use crate::config::{ExperimentConfig, Format};
use crate::report::{self, Record, VERSION};

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Done {
    pub path: PathBuf,
    /// Every claim held (or every check passed).
    pub ok: bool,
    pub lines: Vec<String>,
}

fn params(cfg: &ExperimentConfig) -> Params {
    Params { k: cfg.k, n: cfg.n }
}

fn eval_settings(cfg: &ExperimentConfig) -> EvalSettings {
    EvalSettings { mode: cfg.mode.into(), limit: cfg.limit, trials: cfg.trials, seed: cfg.seed }
}

/// Cases named by `target`: a construction (`pi4`) or one case (`pi4.dB`).
pub fn select_cases(target: &str, p: Params) -> Result<Vec<ConstructionCase>> {
    if target.contains('.') {
        protocols::case(target, p).map(|c| vec![c])
    } else if CONSTRUCTIONS.contains(&target) {
        protocols::cases(target, p)
    } else {
        Err(Error::UnknownLabel(target.into()))
    }
}

pub fn construct(cfg: &ExperimentConfig) -> Result<Done> {
    let target = cfg.target()?;
    let cases = select_cases(target, params(cfg))?;
    let s = eval_settings(cfg);
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for c in &cases {
        let got = assess_case(c, &s)?;
        let worst = got.iter().map(|a| a.report.value).fold(0.0, f64::max);
        let ok = got.iter().all(|a| a.verdict);
        lines.push(format!(
            "{:<10} max advantage {worst:.6} vs claimed {:.6} ({}) {}",
            c.label,
            c.claim.value(),
            c.claim.exact(),
            if ok { "ok" } else { "VIOLATED" }
        ));
        records.extend(got.iter().map(Record::from));
    }
    let path = report::write(cfg, target, &records)?;
    Ok(Done { path, ok: records.iter().all(|r| r.verdict), lines })
}

/// Attack named by `target` (`rot`, `attack.rabin:p=1/4`, ...). `--p` and
/// `--s` override parameters in the label.
pub fn resolve_attack(cfg: &ExperimentConfig) -> Result<Attack> {
    let target = cfg.target()?;
    let label = if target.starts_with("attack.") { target.to_string() } else { format!("attack.{target}") };
    let base = Attack::parse(&label)?;
    let p = match &cfg.p {
        Some(p) => parse_probability(p)?,
        None => base.p,
    };
    let s = match &cfg.s {
        Some(s) => s.parse().map_err(|_| Error::Input(format!("bad string length {s:?}")))?,
        None => base.s,
    };
    Attack::new(base.theorem, p, s)
}

pub fn attack(cfg: &ExperimentConfig) -> Result<Done> {
    let a = resolve_attack(cfg)?;
    let s = AttackSettings { mode: cfg.mode.into(), limit: cfg.limit, trials: cfg.trials, seed: cfg.seed };
    let res = attacks::run_attack(&a, &s)?;
    let records: Vec<Record> = res.iter().map(Record::from).collect();
    let mut lines = vec![format!("{a}: trigger bound {} (eps threshold {})", a.bound(), epsilon_threshold(&a.bound()))];
    for r in &res {
        lines.push(format!(
            "  {:<20} trigger {:.6} [{:.6}, {:.6}] ideal {} {}",
            r.strategy,
            r.report.value,
            r.report.ci_low,
            r.report.ci_high,
            r.ideal_trigger,
            if r.verdict { "meets bound" } else { "BELOW BOUND" }
        ));
    }
    let label = a.to_string();
    let path = report::write(cfg, label.trim_start_matches("attack."), &records)?;
    Ok(Done { path, ok: records.iter().all(|r| r.verdict), lines })
}

/// One row of the bounds table: an impossibility threshold or a tail
/// envelope next to the exact value it covers.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub kind: String,
    pub name: String,
    pub p: Option<String>,
    pub s: Option<String>,
    pub size: Option<u32>,
    pub value: f64,
    pub exact: String,
    pub limit: f64,
    pub holds: bool,
    pub note: String,
}

fn list<T>(text: Option<&str>, default: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.unwrap_or(default).split(',').map(|x| parse(x.trim())).collect()
}

/// String length, with `None` standing for the unbounded limit.
fn parse_s(x: &str) -> Result<Option<u8>> {
    match x {
        "inf" | "infinity" => Ok(None),
        _ => match x.parse::<u8>() {
            Ok(s @ 1..=32) => Ok(Some(s)),
            _ => Err(Error::Input(format!("string length must be 1..=32 or inf, got {x:?}"))),
        },
    }
}

fn threshold_row(th: Theorem, p: Option<Ratio<u64>>, s: Option<u8>) -> Result<BoundRow> {
    let pp = p.unwrap_or(Ratio::new(1, 2));
    let bound = match s {
        Some(s) => impossibility_bound(th, pp, s)?,
        None => asymptotic_bound(th, pp)?,
    };
    let eps = epsilon_threshold(&bound);
    let degenerate = eps == num_rational::BigRational::from_integer(0.into());
    Ok(BoundRow {
        kind: "threshold".into(),
        name: format!("{th:?}").to_lowercase(),
        p: p.map(|p| p.to_string()),
        s: Some(s.map_or("inf".into(), |s| s.to_string())),
        size: None,
        value: to_f64(&eps),
        exact: eps.to_string(),
        limit: to_f64(&bound),
        holds: true,
        note: if degenerate {
            "constructible: no impossibility".into()
        } else {
            "eps must exceed this; limit column is the attack trigger bound".into()
        },
    })
}

fn envelope_row(name: &str, size: u32, exact: &num_rational::BigRational, envelope: f64, note: String) -> BoundRow {
    BoundRow {
        kind: "envelope".into(),
        name: name.into(),
        p: None,
        s: None,
        size: Some(size),
        value: to_f64(exact),
        exact: exact.to_string(),
        limit: envelope,
        holds: to_f64(exact) <= envelope,
        note,
    }
}

pub fn bound_rows(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let ps = list(cfg.p.as_deref(), "0,1/4,1/2,3/4,1", parse_probability)?;
    let ss = list(cfg.s.as_deref(), "1,2,4,8,inf", parse_s)?;
    let mut rows = Vec::new();
    for &s in &ss {
        rows.push(threshold_row(Theorem::Rot, None, s)?);
    }
    for &p in &ps {
        for &s in &ss {
            rows.push(threshold_row(Theorem::Rabin, Some(p), s)?);
        }
    }
    rows.push(threshold_row(Theorem::And, None, Some(1))?);

    let third = 1.0 / 3.0;
    let ks: Vec<u32> = if cfg.k == 0 { Vec::new() } else { (1..=cfg.k.clamp(1, 16)).collect() };
    for k in ks {
        let mu = 1.5 * f64::from(k);
        let note = format!("Binom({}, 1/2), mean {mu}, delta 1/3", 3 * k);
        rows.push(envelope_row("pi4 abort", k, &pi4_abort(k)?, chernoff_upper(mu, third, TailSide::Lower)?, note.clone()));
        rows.push(envelope_row("pi4 both known", k, &pi4_both_known(k)?, chernoff_upper(mu, third, TailSide::Upper)?, note));
    }
    for n in (6..=cfg.n.clamp(6, 48)).step_by(6).filter(|n| pi5_check_params(*n).is_ok()) {
        let (k, h, _) = pi5_check_params(n)?;
        let mu = f64::from(k) / 2.0;
        rows.push(envelope_row(
            "pi5 abort",
            n,
            &pi5_honest_abort_oracle(n)?,
            chernoff_upper(mu, third, TailSide::Lower)?,
            format!("Binom({k}, 1/2), mean {mu}, delta 1/3"),
        ));
        // a receiver skipping half the states: how few land in the test set
        let x = u64::from(n / 2);
        let t = 1.0 / 6.0;
        let (low, _) = hypergeometric_tails(u64::from(n), x, u64::from(h), &num_rational::BigRational::new(1.into(), 6.into()));
        rows.push(envelope_row(
            "pi5 skipped in test set, lower tail",
            n,
            &low,
            hoeffding_hypergeometric(u64::from(n), x, u64::from(h), t)?,
            format!("Hyp(n={n}, skipped={x}, test={h}), t = 1/6"),
        ));
    }
    Ok(rows)
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<Done> {
    let rows = bound_rows(cfg)?;
    let lines = rows
        .iter()
        .map(|r| {
            format!(
                "{:<9} {:<36} p={:<4} s={:<3} size={:<3} value {:<12.6} limit {:<12.6} {}",
                r.kind,
                r.name,
                r.p.as_deref().unwrap_or("-"),
                r.s.as_deref().unwrap_or("-"),
                r.size.map_or("-".into(), |s| s.to_string()),
                r.value,
                r.limit,
                if r.holds { &r.note } else { "ENVELOPE FAILS" }
            )
        })
        .collect();
    let path = report::write(cfg, "table", &rows)?;
    Ok(Done { path, ok: rows.iter().all(|r| r.holds), lines })
}

/// A single recorded run with its causality audit.
#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub tool: &'static str,
    pub version: &'static str,
    pub label: String,
    pub system: String,
    pub distinguisher: String,
    pub seed: u64,
    pub decision: bool,
    pub aborted: Vec<String>,
    pub audit_ok: bool,
    pub audit: Vec<AuditEntry>,
    pub events: Vec<Event>,
}

fn trace_run(label: &str, system: &str, sys: &System, d: &System, dname: &str, seed: u64) -> Result<(Trace, relcrypt::engine::Transcript)> {
    let exp = Experiment::new(sys.clone(), d.clone())?;
    let (decision, t) = run(&exp, seed)?;
    let audit = t.audit(&exp).entries;
    let trace = Trace {
        tool: report::TOOL,
        version: VERSION,
        label: label.into(),
        system: system.into(),
        distinguisher: dname.into(),
        seed,
        decision,
        aborted: t.aborted().into_iter().map(String::from).collect(),
        audit_ok: audit.iter().all(|e| e.ok),
        audit,
        events: t.events().to_vec(),
    };
    Ok((trace, t))
}

/// Runs the real system of `case` once against its first reference
/// distinguisher (or a random input script) and audits the transcript,
/// including the case's ordering clauses.
pub fn trace_case(case: &ConstructionCase, seed: u64) -> Result<Trace> {
    let (d, dname) = match case.references.first() {
        Some(r) => (r.system.clone(), r.name.clone()),
        None => {
            let v = case.random_inputs(seed).ok_or_else(|| Error::Usage(format!("{} has no scriptable inputs", case.label)))?;
            (case.script(&v, |_| false)?, "random inputs".into())
        }
    };
    let (mut trace, t) = trace_run(&case.label, "real", &case.real, &d, &dname, seed)?;
    let aborted = t.aborted();
    for c in &case.clauses {
        let (ok, detail) = if aborted.is_empty() {
            match c.check(&t) {
                Ok(()) => (true, String::new()),
                Err(e) => (false, e),
            }
        } else {
            (true, format!("skipped, {} aborted", aborted.join(", ")))
        };
        trace.audit.push(AuditEntry { rule: format!("clause {}", c.name), ok, detail });
    }
    trace.audit_ok = trace.audit.iter().all(|e| e.ok);
    Ok(trace)
}

pub fn trace(cfg: &ExperimentConfig) -> Result<Done> {
    let target = cfg.target()?;
    let tr = if target.starts_with("attack.") || ["rot", "rabin", "and"].contains(&target) {
        let a = resolve_attack(cfg)?;
        let st = a.library()?.remove(0);
        let chain = attacks::build_chain(&a.triple()?, &st)?;
        trace_run(&a.to_string(), &format!("chain with {}", st.name), &chain, &a.distinguisher()?, "attack distinguisher", cfg.seed)?.0
    } else {
        if !target.contains('.') {
            return Err(Error::Usage(format!("trace needs one case such as {target}.honest")));
        }
        let case = select_cases(target, params(cfg))?.remove(0);
        trace_case(&case, cfg.seed)?
    };
    let mut lines = vec![format!(
        "{} seed {}: {} events, decision {}, audit {}",
        tr.label,
        tr.seed,
        tr.events.len(),
        tr.decision,
        if tr.audit_ok { "all pass" } else { "FAILED" }
    )];
    lines.extend(tr.audit.iter().map(|e| format!("  {} {}{}", if e.ok { "pass" } else { "FAIL" }, e.rule, if e.detail.is_empty() { String::new() } else { format!(" ({})", e.detail) })));
    let stem = format!("{}-seed{}", tr.label, tr.seed);
    let path = match cfg.format {
        Format::Json => write_trace(cfg, &stem, &tr)?,
        Format::Csv => report::write(cfg, &stem, &tr.events)?,
    };
    Ok(Done { path, ok: tr.audit_ok, lines })
}

fn write_trace(cfg: &ExperimentConfig, stem: &str, tr: &Trace) -> Result<PathBuf> {
    #[derive(Serialize)]
    struct WithConfig<'a> {
        config: &'a ExperimentConfig,
        #[serde(flatten)]
        trace: &'a Trace,
    }
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::Usage(format!("{}: {e}", cfg.out.display())))?;
    let safe: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    let path = cfg.out.join(format!("trace-{safe}.json"));
    let text = serde_json::to_string_pretty(&WithConfig { config: cfg, trace: tr }).map_err(|e| Error::Usage(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}
