use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod config;
mod errors;
mod manifest;
mod methods;

use cli::{Cli, Command};
use errors::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(args) => commands::cmd_ingest(args),
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Forecast(args) => commands::cmd_forecast(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Compare(args) => commands::cmd_compare(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.render());
            ExitCode::from(err.exit_code())
        }
    }
}
