//! Command-line front end for CoxPH-SuSiE: fitting, simulation, Bayes
//! factor comparison and evaluation against simulated truth.

pub mod commands;
pub mod document;
pub mod error;
pub mod settings;
pub mod table;

pub use error::{CliError, Result};
pub use settings::{Cli, Command};

use settings::FileConfig;

pub const DEFAULT_SEED: u64 = 1;

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Fit(args) => commands::fit(args, &file),
        Command::Simulate(args) => commands::simulate(args, seed),
        Command::BfCompare(args) => commands::bf_compare(args, &file, seed),
        Command::Evaluate(args) => commands::evaluate(args),
    })
}
