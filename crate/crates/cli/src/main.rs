//! `tnl`: solve the time-non-local oscillator, run the validation suite and
//! write figure data.
//!
//! Exit codes: 0 success, 1 a normative check failed, 2 bad input,
//! 3 numerical failure. Errors go to stderr as a single JSON object.

mod args;
mod commands;
mod config;
mod failure;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::failure::{Failure, EXIT_INPUT};

fn run(cli: Cli) -> Result<u8, Failure> {
    let (flags, defaults) = match &cli.command {
        Command::Solve(o) | Command::Validate(o) => (o.clone(), config::desk_defaults()),
        Command::Figures(o) => (o.clone(), config::figure_defaults()),
    };
    let cfg = config::resolve(flags, defaults)?;
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    log::debug!("resolved configuration: {cfg:?}");
    match cli.command {
        Command::Solve(_) => commands::solve(&cfg),
        Command::Validate(_) => commands::validate(&cfg),
        Command::Figures(_) => commands::figures(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TNL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure {
                kind: "usage".into(),
                message: e.render().to_string().trim().to_string(),
                code: EXIT_INPUT,
            };
            eprintln!("{}", f.to_json());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
