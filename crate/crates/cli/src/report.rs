use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use relcrypt::attacks::StrategyOutcome;
use relcrypt::protocols::Assessment;
use relcrypt::{Error, Result};

use crate::config::{ExperimentConfig, Format};

pub const TOOL: &str = "relcrypt";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One measured value against its claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub label: String,
    pub condition: String,
    pub distinguisher: String,
    pub mode: String,
    pub value: f64,
    pub exact: Option<String>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: Option<u64>,
    pub claimed_bound: f64,
    pub claimed_exact: String,
    pub verdict: bool,
    pub note: Option<String>,
}

impl From<&Assessment> for Record {
    fn from(a: &Assessment) -> Record {
        Record {
            label: a.label.clone(),
            condition: a.condition.tag().into(),
            distinguisher: a.distinguisher.clone(),
            mode: a.report.mode.to_string(),
            value: a.report.value,
            exact: a.report.exact.clone(),
            ci_low: a.report.ci_low,
            ci_high: a.report.ci_high,
            trials: a.report.trials,
            seed: a.report.seed,
            claimed_bound: a.claimed_bound,
            claimed_exact: a.claimed_exact.clone(),
            verdict: a.verdict,
            note: a.fallback.as_ref().map(|f| format!("sampled: {f}")),
        }
    }
}

impl From<&StrategyOutcome> for Record {
    fn from(o: &StrategyOutcome) -> Record {
        Record {
            label: o.label.clone(),
            condition: "attack".into(),
            distinguisher: o.strategy.clone(),
            mode: o.report.mode.to_string(),
            value: o.report.value,
            exact: o.report.exact.clone(),
            ci_low: o.report.ci_low,
            ci_high: o.report.ci_high,
            trials: o.report.trials,
            seed: o.report.seed,
            claimed_bound: o.bound,
            claimed_exact: o.bound_exact.clone(),
            verdict: o.verdict,
            note: Some(match &o.fallback {
                Some(f) => format!("ideal trigger {}; eps >= {:.6}; sampled: {f}", o.ideal_trigger, o.epsilon_at_least),
                None => format!("ideal trigger {}; eps >= {:.6}", o.ideal_trigger, o.epsilon_at_least),
            }),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    records: &'a [R],
}

/// Writes `records` under the configured directory and returns the path.
pub fn write<R: Serialize>(cfg: &ExperimentConfig, stem: &str, records: &[R]) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out).map_err(|e| io_error(&cfg.out, e))?;
    let safe: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    let path = cfg.out.join(format!("{}-{safe}.{}", cfg.command, cfg.format.ext()));
    match cfg.format {
        Format::Json => {
            let env = Envelope { tool: TOOL, version: VERSION, config: cfg, records };
            let text = serde_json::to_string_pretty(&env).map_err(|e| Error::Usage(e.to_string()))?;
            fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        }
        Format::Csv => {
            let config = serde_json::to_string(cfg).map_err(|e| Error::Usage(e.to_string()))?;
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
            let csv_err = |e: csv::Error| Error::Usage(format!("{}: {e}", path.display()));
            for (i, r) in records.iter().enumerate() {
                let Value::Object(map) = serde_json::to_value(r).map_err(|e| Error::Usage(e.to_string()))? else {
                    return Err(Error::Usage("report rows must be records".into()));
                };
                if i == 0 {
                    let head = map.keys().map(String::as_str).chain(["version", "config"]);
                    w.write_record(head).map_err(csv_err)?;
                }
                let cells = map.values().map(cell).chain([VERSION.to_string(), config.clone()]);
                w.write_record(cells).map_err(csv_err)?;
            }
            w.flush().map_err(|e| io_error(&path, e))?;
        }
    }
    Ok(path)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Usage(format!("{}: {e}", path.display()))
}
