//! `cparity`: conditional-parity audits, kernel tests, randomized decision
//! rules, debiasing and structural-model checks from the command line.
//!
//! Exit status: 0 success, 2 usage, 3 unreadable input, 4 domain error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod dataset;
mod failure;

use commands::{audit, debias, kci, randomize, sat, sem};
use failure::{ExitKind, Outcome};

#[derive(Debug, Parser)]
#[command(name = "cparity", version, about = "Conditional parity testing and repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Test(kci::TestArgs),
    Audit(audit::AuditArgs),
    Randomize(randomize::RandomizeArgs),
    SimulateSat(sat::SatArgs),
    Debias(debias::DebiasArgs),
    Sem(sem::SemArgs),
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Test(a) => kci::run(a),
        Command::Audit(a) => audit::run(a),
        Command::Randomize(a) => randomize::run(a),
        Command::SimulateSat(a) => sat::run(a),
        Command::Debias(a) => debias::run(a),
        Command::Sem(a) => sem::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitKind::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind as u8)
        }
    }
}
