//! `hfsim` command-line harness.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 when a computation or I/O fails.

mod args;
mod commands;
mod input;
mod plot;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> hfsim::Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(hfsim::Error::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| hfsim::Error::Resource(e.to_string()))?;
    }
    match &cli.command {
        Command::Compile(a) => commands::compile(a),
        Command::Curve(a) => commands::curve(a),
        Command::Vqe(a) => commands::vqe(a),
        Command::Probe(a) => commands::probe(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
