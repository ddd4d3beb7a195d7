//! Batch runner for relcrypt: construction cases, impossibility attacks,
//! bound tables and single-run traces, with JSON or CSV reports.
//!
//! Exit status: 0 when every claim holds, 1 when a claim is violated or a
//! run fails, 2 on usage or parameter errors.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use relcrypt::Error;

pub mod commands;
pub mod config;
pub mod report;

pub use commands::Done;
pub use config::{ExperimentConfig, Flags, Format, ModeArg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "relcrypt", version, about = "Relativistic two-party cryptography experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure a construction (pi1..pi6) or one case (pi4.dB) against its claims
    Construct {
        target: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run an impossibility attack (rot, rabin, and) over its strategy library
    Attack {
        target: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Tabulate epsilon thresholds and tail envelopes
    Bounds {
        #[command(flatten)]
        flags: Flags,
    },
    /// Record one run of a case and audit its causality
    Trace {
        target: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Usage(_) | Error::UnknownLabel(_) | Error::Wiring { .. } => EXIT_USAGE,
        _ => EXIT_VIOLATION,
    }
}

/// Resolves the config and runs one subcommand.
pub fn execute(cmd: &Command) -> relcrypt::Result<Done> {
    let (name, target, flags) = match cmd {
        Command::Construct { target, flags } => ("construct", target.clone(), flags),
        Command::Attack { target, flags } => ("attack", target.clone(), flags),
        Command::Bounds { flags } => ("bounds", None, flags),
        Command::Trace { target, flags } => ("trace", target.clone(), flags),
    };
    let cfg = ExperimentConfig::resolve(name, target, flags)?;
    match cmd {
        Command::Construct { .. } => commands::construct(&cfg),
        Command::Attack { .. } => commands::attack(&cfg),
        Command::Bounds { .. } => commands::bounds(&cfg),
        Command::Trace { .. } => commands::trace(&cfg),
    }
}

/// Parses `args` (program name first), runs, prints a summary and returns
/// the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.cmd) {
        Ok(done) => {
            for l in &done.lines {
                println!("{l}");
            }
            println!("report: {}", done.path.display());
            if done.ok {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
