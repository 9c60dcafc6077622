use std::process::ExitCode;

use clap::Parser;
use gridcert_cli::args::Cli;
use gridcert_cli::{run, Verdict};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDCERT_LOG", "error"))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gridcert: {e}");
            ExitCode::from(2)
        }
    }
}
