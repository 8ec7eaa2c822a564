mod args;
mod commands;
mod fail;

use clap::Parser;

use args::{Cli, Command};
use fail::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { fail::USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();

    let result: Result<(), CliError> = match &cli.command {
        Command::Generate(a) => commands::generate(a, &cli.global),
        Command::Clean(a) => commands::clean(a),
        Command::Experiment(a) => commands::experiment(a, &cli.global),
        Command::Analyze(a) => commands::analyze(a),
        Command::Leaderboard(a) => commands::leaderboard(a),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
