use std::process::ExitCode;

use clap::Parser;
use coxph_susie_cli::Cli;

fn main() -> ExitCode {
    match coxph_susie_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
