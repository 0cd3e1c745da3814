//! `shiftorbit`: periodic approximations, splices, Birkhoff-average checks
//! and cyclic-system demos from the command line.
//!
//! Exit codes: 0 all certified bounds hold, 1 a bound is violated,
//! 2 inconclusive, 3 usage or input error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;
mod source;

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "shiftorbit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rationalize a measure and build its periodic point.
    Approximate(RunConfig),
    /// Build one periodic point per level and splice them into a typical point.
    Splice(RunConfig),
    /// Check Birkhoff averages of a point against a target measure.
    Verify(RunConfig),
    /// Turn a trajectory into a word measure and report its shift balance.
    Ingest(RunConfig),
    /// Stopping-time covering of a random instance on a finite cycle.
    CyclicDemo(RunConfig),
}

const EXIT_ERROR: u8 = 3;

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Approximate(c) => commands::cmd_approximate(&c.resolve()?),
        Command::Splice(c) => commands::cmd_splice(&c.resolve()?),
        Command::Verify(c) => commands::cmd_verify(&c.resolve()?),
        Command::Ingest(c) => commands::cmd_ingest(&c.resolve()?),
        Command::CyclicDemo(c) => commands::cmd_cyclic_demo(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
