use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use relcrypt::engine::exact::DEFAULT_LIMIT;
use relcrypt::stats::Mode;
use relcrypt::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Montecarlo,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Montecarlo => Mode::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// config file, then to the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// exact enumeration or Monte Carlo sampling
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Monte Carlo trials per estimate
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// security parameter for pi4 and pi6
    #[arg(long)]
    pub k: Option<u32>,
    /// number of states for pi5
    #[arg(long)]
    pub n: Option<u32>,
    /// transfer probability, as a fraction or decimal (a list for `bounds`)
    #[arg(long)]
    pub p: Option<String>,
    /// string length (a list for `bounds`, where `inf` is allowed)
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// report directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// cap on exact enumeration branches
    #[arg(long)]
    pub limit: Option<u64>,
    /// TOML file with any of the fields above plus `target`
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    target: Option<String>,
    mode: Option<ModeArg>,
    trials: Option<u64>,
    seed: Option<u64>,
    k: Option<u32>,
    n: Option<u32>,
    p: Option<String>,
    s: Option<String>,
    format: Option<Format>,
    out: Option<PathBuf>,
    limit: Option<u64>,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("reading {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Usage(format!("parsing {}: {e}", path.display())))
}

/// Fully resolved settings of one invocation; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub target: Option<String>,
    pub mode: ModeArg,
    pub trials: u64,
    pub seed: u64,
    pub k: u32,
    pub n: u32,
    pub p: Option<String>,
    pub s: Option<String>,
    pub format: Format,
    pub out: PathBuf,
    pub limit: u64,
}

impl ExperimentConfig {
    pub fn resolve(command: &str, target: Option<String>, flags: &Flags) -> Result<ExperimentConfig> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        Ok(ExperimentConfig {
            command: command.into(),
            target: target.or(file.target),
            mode: flags.mode.or(file.mode).unwrap_or(ModeArg::Exact),
            trials: flags.trials.or(file.trials).unwrap_or(100_000),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            k: flags.k.or(file.k).unwrap_or(4),
            n: flags.n.or(file.n).unwrap_or(12),
            p: flags.p.clone().or(file.p),
            s: flags.s.clone().or(file.s),
            format: flags.format.or(file.format).unwrap_or(Format::Json),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("reports")),
            limit: flags.limit.or(file.limit).unwrap_or(DEFAULT_LIMIT),
        })
    }

    pub fn target(&self) -> Result<&str> {
        self.target.as_deref().ok_or_else(|| Error::Usage(format!("{} needs a target", self.command)))
    }
}
