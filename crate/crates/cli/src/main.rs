mod cli;
mod config;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use cli::{Cli, Common, HjbCommand, MdpCommand, Top};
use config::{RunConfig, Settings};
use error::CliError;

/// Environment variable capping the worker thread count.
const THREADS_VAR: &str = "VANISH_THREADS";

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn merged(label: &str, common: &Common, flags: &impl Serialize) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    RunConfig::resolve(label, file.overlay(flags)?)
}

fn config(cli: Cli) -> Result<RunConfig, CliError> {
    match cli.command {
        Top::Run { config } => {
            let s = Settings::from_file(&config)?;
            let label = s
                .command
                .clone()
                .ok_or_else(|| CliError::Input(format!("{}: missing `command`", config.display())))?;
            RunConfig::resolve(&label, s)
        }
        Top::Mdp(c) => match c {
            MdpCommand::Solve(a) => merged("mdp solve", &a.common, &a),
            MdpCommand::Gainbias(a) => merged("mdp gainbias", &a.common, &a),
            MdpCommand::Sweep(a) => merged("mdp sweep", &a.common, &a),
            MdpCommand::Oracle(a) => merged("mdp oracle", &a.common, &a),
            MdpCommand::Random(a) => merged("mdp random", &a.common, &a),
        },
        Top::Hjb(c) => match c {
            HjbCommand::Solve(a) => merged("hjb solve", &a.common, &a),
            HjbCommand::Sweep(a) => merged("hjb sweep", &a.common, &a),
            HjbCommand::CheckS(a) => merged("hjb check-s", &a.common, &a),
            HjbCommand::Reach(a) => merged("hjb reach", &a.common, &a),
            HjbCommand::RotationPair(a) => merged("hjb rotation-pair", &a.common, &a),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| config(cli)).and_then(|cfg| run::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
