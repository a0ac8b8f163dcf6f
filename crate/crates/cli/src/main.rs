mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command, UsageError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Partition(a) => commands::partition(&a),
        Command::Train(a) => commands::train(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::Report(a) => report::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
