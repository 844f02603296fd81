use std::process::ExitCode;

use clap::Parser;

use avlem_cli::cli::Cli;
use avlem_cli::commands;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = cli.command.resolve().and_then(|config| {
        eprintln!("{}", config.banner(name));
        commands::run(&cli.command, &config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
