//! Command-line harness: synthetic data, single paths, cross-validated
//! grid search and the consistency study. Every command writes into one run
//! directory that ends with a checksum manifest.

pub mod config;
pub mod consistency;
pub mod cross_validate;
pub mod error;
pub mod fit_path;
pub mod folds;
pub mod gen_data;
pub mod problem;
pub mod run_dir;

use std::path::PathBuf;

pub use config::{Cli, Command};
pub use error::{CliError, Result};

/// Resolves the config for `cli.command` and runs it on a pool of at most
/// `cli.workers` threads. Returns the manifest path.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let file = cli.config.as_deref();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::GenData(args) => gen_data::run(&config::resolve(file, args)?),
        Command::FitPath(args) => fit_path::run(&config::resolve(file, args)?),
        Command::CrossValidate(args) => cross_validate::run(&config::resolve(file, args)?),
        Command::Consistency(args) => consistency::run(&config::resolve(file, args)?),
    })
}
