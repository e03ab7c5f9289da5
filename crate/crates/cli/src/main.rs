//! `radial`: command-line front end for radial attention masks.
//!
//! Output is machine-readable by default: one JSON object per invocation,
//! or CSV with a header row. `--pretty` switches to indented JSON and
//! aligned tables. Exit codes are 0 on success, 1 when a verification
//! check fails and 2 for usage and configuration errors.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Why a subcommand did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, bad input files, limits exceeded.
    Usage(String),
    /// The subcommand ran but a check did not hold.
    Check,
}

impl From<radial_attention::Error> for Failure {
    fn from(e: radial_attention::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RADIAL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("RADIAL_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("RADIAL_THREADS: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let pretty = cli.pretty;
    match cli.command {
        Command::Mask(a) => commands::mask(a, pretty),
        Command::Stats(a) => commands::stats(a, pretty),
        Command::Verify(a) => commands::verify(a, pretty),
        Command::Compare(a) => commands::compare(a, pretty),
        Command::Curves(a) => commands::curves(a, pretty),
        Command::Fit(a) => commands::fit(a, pretty),
        Command::Bench(a) => commands::bench(a, pretty),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
